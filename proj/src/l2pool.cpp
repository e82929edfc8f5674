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

#include "l2net/l2pool.hpp"

#include <algorithm>
#include <cmath>

#include "l2net/autograd.hpp"
#include "l2net/error.hpp"

namespace l2net {
namespace {

kernels::L2Backward kernel_mode(GradientMode mode) {
  return mode == GradientMode::kAnalytic ? kernels::L2Backward::kAnalytic
                                         : kernels::L2Backward::kPaperLiteral;
}

}  // namespace

void L2PoolConfig::validate() const {
  check(filter_size >= 1 && stride >= 1, ErrorCode::kInvalidArgument,
        "filter_size and stride must be >= 1");
  check(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be > 0");
}

kernels::PoolGeom pool_geometry(const Shape& input, std::size_t filter,
                                std::size_t stride) {
  check(input.size() == 3, ErrorCode::kShapeMismatch,
        "pooling expects [C,H,W], got " + shape_to_string(input));
  check(filter >= 1 && stride >= 1, ErrorCode::kInvalidArgument,
        "filter and stride must be >= 1");
  const std::size_t c = input[0], h = input[1], w = input[2];
  check(h >= filter && w >= filter, ErrorCode::kWindowLargerThanInput,
        "window " + std::to_string(filter) + " exceeds " +
            shape_to_string(input));
  return {c, h, w, filter, stride, (h - filter) / stride + 1,
          (w - filter) / stride + 1};
}

Tensor l2_pool_forward(const Tensor& input, const L2PoolConfig& cfg) {
  cfg.validate();
  const auto g = pool_geometry(input.shape(), cfg.filter_size, cfg.stride);
  std::vector<double> out(g.c * g.h_out * g.w_out);
  kernels::l2pool_forward(input.data(), g, cfg.normalized, out);
  return Tensor::adopt({g.c, g.h_out, g.w_out}, std::move(out), false);
}

Tensor l2_pool_backward(const Tensor& input, const Tensor& upstream_grad,
                        const L2PoolConfig& cfg) {
  cfg.validate();
  const auto g = pool_geometry(input.shape(), cfg.filter_size, cfg.stride);
  check(upstream_grad.shape() == Shape({g.c, g.h_out, g.w_out}),
        ErrorCode::kShapeMismatch,
        "upstream grad " + shape_to_string(upstream_grad.shape()));
  std::vector<double> gin(input.numel(), 0.0);
  kernels::l2pool_backward(input.data(), upstream_grad.data(), g,
                           cfg.normalized, kernel_mode(cfg.gradient_mode),
                           cfg.epsilon, gin);
  return Tensor::adopt(input.shape(), std::move(gin), false);
}

Tensor l2_pool(const Tensor& input, const L2PoolConfig& cfg) {
  cfg.validate();
  const auto g = pool_geometry(input.shape(), cfg.filter_size, cfg.stride);
  std::vector<double> out(g.c * g.h_out * g.w_out);
  kernels::l2pool_forward(input.data(), g, cfg.normalized, out);
  return record_op({&input}, {g.c, g.h_out, g.w_out}, std::move(out),
                   [input, g, cfg](std::span<const double> gout,
                                   std::span<const std::span<double>> gin) {
                     kernels::l2pool_backward(input.data(), gout, g,
                                              cfg.normalized,
                                              kernel_mode(cfg.gradient_mode),
                                              cfg.epsilon, gin[0]);
                   });
}

Tensor global_l2_pool(const Tensor& input, const L2PoolConfig& cfg) {
  cfg.validate();
  check(input.rank() == 3, ErrorCode::kShapeMismatch,
        "global_l2_pool expects [C,H,W], got " + shape_to_string(input.shape()));
  const std::size_t c = input.dim(0);
  const std::size_t plane = input.dim(1) * input.dim(2);
  const double n = static_cast<double>(plane);
  std::vector<double> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double v = input[ch * plane + i];
      sum += v * v;
    }
    out[ch] = cfg.normalized ? std::sqrt(sum / n) : std::sqrt(sum);
  }
  return record_op(
      {&input}, {c}, std::move(out),
      [input, cfg, c, plane, n](std::span<const double> gout,
                                std::span<const std::span<double>> gin) {
        const double scale = cfg.normalized ? std::sqrt(n) : 1.0;
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum = 0.0;
          for (std::size_t i = 0; i < plane; ++i) {
            const double v = input[ch * plane + i];
            sum += v * v;
          }
          const double norm = std::max(std::sqrt(sum), cfg.epsilon);
          if (cfg.gradient_mode == GradientMode::kAnalytic) {
            const double k = gout[ch] / (scale * norm);
            for (std::size_t i = 0; i < plane; ++i) {
              gin[0][ch * plane + i] += input[ch * plane + i] * k;
            }
          } else {
            const double v = n * gout[ch] / (2.0 * norm);
            for (std::size_t i = 0; i < plane; ++i) gin[0][ch * plane + i] += v;
          }
        }
      });
}

}  // namespace l2net
