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

#include <cstddef>
#include <cstdint>
#include <span>

// Raw numeric kernels over row-major buffers. Two implementations exist:
// `serial` is the reference, `parallel` splits the outer channel/row loop
// across OpenMP threads. Both use the same per-output accumulation order, so
// their results are bit-identical. The unqualified functions dispatch on
// `parallel_enabled()`.
namespace l2net::kernels {

struct ConvGeom {
  std::size_t c_in, h, w;
  std::size_t c_out, k, stride, pad;
  std::size_t h_out, w_out;
};

struct PoolGeom {
  std::size_t c, h, w;
  std::size_t filter, stride;
  std::size_t h_out, w_out;
};

enum class L2Backward { kAnalytic, kPaperLiteral };

#define L2NET_KERNEL_DECLS                                                     \
  void conv2d_forward(std::span<const double> in, std::span<const double> wt,  \
                      std::span<const double> bias, const ConvGeom& g,         \
                      std::span<double> out);                                  \
  void conv2d_backward_input(std::span<const double> gout,                     \
                             std::span<const double> wt, const ConvGeom& g,    \
                             std::span<double> gin);                           \
  void conv2d_backward_params(std::span<const double> gout,                    \
                              std::span<const double> in, const ConvGeom& g,   \
                              std::span<double> gwt, std::span<double> gbias); \
  void l2pool_forward(std::span<const double> in, const PoolGeom& g,           \
                      bool normalized, std::span<double> out);                 \
  void l2pool_backward(std::span<const double> in,                             \
                       std::span<const double> gout, const PoolGeom& g,        \
                       bool normalized, L2Backward mode, double epsilon,       \
                       std::span<double> gin);                                 \
  void maxpool_forward(std::span<const double> in, const PoolGeom& g,          \
                       std::span<double> out, std::span<std::size_t> argmax);  \
  void maxpool_backward(std::span<const double> gout,                          \
                        std::span<const std::size_t> argmax,                   \
                        const PoolGeom& g, std::span<double> gin);             \
  void matmul(std::span<const double> a, std::span<const double> b,            \
              std::size_t m, std::size_t k, std::size_t n,                     \
              std::span<double> out);

namespace serial {
L2NET_KERNEL_DECLS
}
namespace parallel {
L2NET_KERNEL_DECLS
}
L2NET_KERNEL_DECLS

#undef L2NET_KERNEL_DECLS

void set_parallel(bool enabled);
bool parallel_enabled();
bool openmp_available();

}  // namespace l2net::kernels
