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

#include "l2net/layers.hpp"

#include <cmath>

#include "l2net/autograd.hpp"
#include "l2net/error.hpp"
#include "l2net/ops.hpp"

namespace l2net {
namespace {

Tensor kaiming_tensor(Shape shape, std::size_t fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor::create(std::move(shape), std::move(data), true);
}

}  // namespace

ConvLayer ConvLayer::kaiming(std::size_t c_in, std::size_t c_out,
                             std::size_t k, std::size_t stride,
                             std::size_t padding, Rng& rng) {
  ConvLayer layer;
  layer.weight = kaiming_tensor({c_out, c_in, k, k}, c_in * k * k, rng);
  layer.bias = Tensor::zeros({c_out}, true);
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

kernels::ConvGeom conv_geometry(const Shape& input, const ConvLayer& layer) {
  check(input.size() == 3, ErrorCode::kShapeMismatch,
        "conv2d expects [C,H,W], got " + shape_to_string(input));
  check(layer.weight.rank() == 4 && layer.weight.dim(2) == layer.weight.dim(3),
        ErrorCode::kShapeMismatch, "conv weight must be [C_out,C_in,k,k]");
  check(layer.bias.shape() == Shape{layer.weight.dim(0)},
        ErrorCode::kShapeMismatch, "conv bias must be [C_out]");
  check(input[0] == layer.in_channels(), ErrorCode::kShapeMismatch,
        "input has " + std::to_string(input[0]) + " channels, layer expects " +
            std::to_string(layer.in_channels()));
  check(layer.stride >= 1, ErrorCode::kInvalidArgument, "stride must be >= 1");
  const std::size_t k = layer.kernel();
  const std::size_t h = input[1], w = input[2], p = layer.padding;
  check(h + 2 * p >= k && w + 2 * p >= k, ErrorCode::kShapeMismatch,
        "kernel larger than padded input");
  return {input[0], h, w, layer.out_channels(), k, layer.stride, p,
          (h + 2 * p - k) / layer.stride + 1,
          (w + 2 * p - k) / layer.stride + 1};
}

Tensor conv2d(const Tensor& input, const ConvLayer& layer) {
  const auto g = conv_geometry(input.shape(), layer);
  std::vector<double> out(g.c_out * g.h_out * g.w_out);
  kernels::conv2d_forward(input.data(), layer.weight.data(), layer.bias.data(),
                          g, out);
  const Tensor& w = layer.weight;
  const Tensor& b = layer.bias;
  return record_op({&input, &w, &b}, {g.c_out, g.h_out, g.w_out},
                   std::move(out),
                   [input, w, g](std::span<const double> gout,
                                 std::span<const std::span<double>> gin) {
                     if (!gin[0].empty()) {
                       kernels::conv2d_backward_input(gout, w.data(), g, gin[0]);
                     }
                     if (!gin[1].empty() || !gin[2].empty()) {
                       // Both buffers are needed by the kernel; route unused
                       // halves into scratch.
                       std::vector<double> wscratch, bscratch;
                       auto gw = gin[1];
                       auto gb = gin[2];
                       if (gw.empty()) {
                         wscratch.assign(w.numel(), 0.0);
                         gw = wscratch;
                       }
                       if (gb.empty()) {
                         bscratch.assign(g.c_out, 0.0);
                         gb = bscratch;
                       }
                       kernels::conv2d_backward_params(gout, input.data(), g,
                                                       gw, gb);
                     }
                   });
}

Tensor max_pool(const Tensor& input, std::size_t filter_size,
                std::size_t stride) {
  check(input.rank() == 3, ErrorCode::kShapeMismatch,
        "max_pool expects [C,H,W]");
  check(filter_size >= 1 && stride >= 1, ErrorCode::kInvalidArgument,
        "filter and stride must be >= 1");
  check(input.dim(1) >= filter_size && input.dim(2) >= filter_size,
        ErrorCode::kWindowLargerThanInput, "window exceeds input");
  const kernels::PoolGeom g{input.dim(0),
                            input.dim(1),
                            input.dim(2),
                            filter_size,
                            stride,
                            (input.dim(1) - filter_size) / stride + 1,
                            (input.dim(2) - filter_size) / stride + 1};
  const std::size_t n = g.c * g.h_out * g.w_out;
  std::vector<double> out(n);
  auto argmax = std::make_shared<std::vector<std::size_t>>(n);
  kernels::maxpool_forward(input.data(), g, out, *argmax);
  return record_op({&input}, {g.c, g.h_out, g.w_out}, std::move(out),
                   [argmax, g](std::span<const double> gout,
                               std::span<const std::span<double>> gin) {
                     kernels::maxpool_backward(gout, *argmax, g, gin[0]);
                   });
}

DenseLayer DenseLayer::kaiming(std::size_t in, std::size_t out, Rng& rng) {
  return {kaiming_tensor({in, out}, in, rng), Tensor::zeros({out}, true)};
}

Tensor dense(const Tensor& x, const DenseLayer& layer) {
  return linear(x, layer.weight, layer.bias);
}

ResidualBlock ResidualBlock::make(ResidualVariant variant,
                                  std::size_t channels, std::size_t kernel,
                                  Rng& rng) {
  check(kernel % 2 == 1, ErrorCode::kInvalidArgument,
        "residual blocks need an odd kernel to preserve shape");
  ResidualBlock block;
  block.variant = variant;
  const std::size_t depth = variant == ResidualVariant::kVanilla ? 2 : 3;
  for (std::size_t i = 0; i < depth; ++i) {
    block.body.push_back(
        {ConvLayer::kaiming(channels, channels, kernel, 1, kernel / 2, rng),
         i + 1 < depth});
  }
  // Last conv starts small so a fresh block is close to the identity.
  auto& last = block.body.back().conv;
  std::vector<double> w = last.weight.values();
  for (double& v : w) v *= 0.1;
  last.weight = Tensor::create(last.weight.shape(), std::move(w), true);
  return block;
}

Tensor residual_forward(const Tensor& input, const ResidualBlock& block) {
  Tensor h = input;
  for (const auto& stage : block.body) {
    h = conv2d(h, stage.conv);
    if (stage.relu) h = relu(h);
  }
  check(h.shape() == input.shape(), ErrorCode::kShapeMismatch,
        "residual body maps " + shape_to_string(input.shape()) + " to " +
            shape_to_string(h.shape()));
  return add(h, input);
}

std::vector<Tensor> residual_preactivations(const Tensor& input,
                                            const ResidualBlock& block) {
  std::vector<Tensor> pre;
  Tensor h = input.detach();
  for (const auto& stage : block.body) {
    ConvLayer frozen{stage.conv.weight.detach(), stage.conv.bias.detach(),
                     stage.conv.stride, stage.conv.padding};
    h = conv2d(h, frozen);
    if (stage.relu) {
      pre.push_back(h);
      h = relu(h);
    }
  }
  return pre;
}

}  // namespace l2net
