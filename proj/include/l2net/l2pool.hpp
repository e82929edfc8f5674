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

#include "l2net/kernels.hpp"
#include "l2net/tensor.hpp"

namespace l2net {

enum class GradientMode { kAnalytic, kPaperLiteral };

// Windowed l2-norm pooling. Each output cell is sqrt(sum of squares) of an
// f x f window, or sqrt(mean of squares) when `normalized`.
struct L2PoolConfig {
  std::size_t filter_size = 2;
  std::size_t stride = 2;
  bool normalized = false;
  // kPaperLiteral gives every window element n * g / (2 |w|), which is not
  // the derivative of the forward pass. Kept selectable for comparison only.
  GradientMode gradient_mode = GradientMode::kAnalytic;
  double epsilon = 1e-12;

  void validate() const;
};

kernels::PoolGeom pool_geometry(const Shape& input, std::size_t filter,
                                std::size_t stride);

// Raw forward/backward on [C,H,W] tensors. No tape involvement.
Tensor l2_pool_forward(const Tensor& input, const L2PoolConfig& cfg);
Tensor l2_pool_backward(const Tensor& input, const Tensor& upstream_grad,
                        const L2PoolConfig& cfg);

// Tape-recording versions.
Tensor l2_pool(const Tensor& input, const L2PoolConfig& cfg);
// [C,H,W] -> [C]: per-channel norm over the whole plane.
Tensor global_l2_pool(const Tensor& input, const L2PoolConfig& cfg = {});

}  // namespace l2net
