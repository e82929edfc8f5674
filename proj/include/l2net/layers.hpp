/* Copyright (c) 2026 The l2net Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "l2net/kernels.hpp"
#include "l2net/tensor.hpp"

namespace l2net {

using Rng = std::mt19937_64;

struct ConvLayer {
  Tensor weight;  // [C_out, C_in, k, k]
  Tensor bias;    // [C_out]
  std::size_t stride = 1;
  std::size_t padding = 0;

  // Kaiming fan-in normal init, zero bias, parameters require grad.
  static ConvLayer kaiming(std::size_t c_in, std::size_t c_out, std::size_t k,
                           std::size_t stride, std::size_t padding, Rng& rng);

  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t kernel() const { return weight.dim(2); }
};

kernels::ConvGeom conv_geometry(const Shape& input, const ConvLayer& layer);

// Cross-correlation plus bias on a [C_in,H,W] input.
Tensor conv2d(const Tensor& input, const ConvLayer& layer);

// Max over f x f windows; gradient goes to the first maximal element.
Tensor max_pool(const Tensor& input, std::size_t filter_size,
                std::size_t stride);

struct DenseLayer {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static DenseLayer kaiming(std::size_t in, std::size_t out, Rng& rng);
};

// x [N,in] -> [N,out]
Tensor dense(const Tensor& x, const DenseLayer& layer);

enum class ResidualVariant { kVanilla, kDense };

struct ResidualStage {
  ConvLayer conv;
  bool relu = true;
};

// output = body(x) + x. Vanilla body: conv-relu-conv. Dense body:
// conv-relu-conv-relu-conv. All stages are 'same' convolutions.
struct ResidualBlock {
  std::vector<ResidualStage> body;
  ResidualVariant variant = ResidualVariant::kVanilla;

  static ResidualBlock make(ResidualVariant variant, std::size_t channels,
                            std::size_t kernel, Rng& rng);
};

Tensor residual_forward(const Tensor& input, const ResidualBlock& block);

// Pre-activation values of every relu in the block body; used to keep
// gradient checks away from the kink.
std::vector<Tensor> residual_preactivations(const Tensor& input,
                                            const ResidualBlock& block);

}  // namespace l2net
