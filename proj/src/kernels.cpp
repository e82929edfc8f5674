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

#include <atomic>

#include "l2net/kernels.hpp"

namespace l2net::kernels {
namespace {

#ifdef L2NET_HAVE_OPENMP
std::atomic<bool> use_parallel{true};
#else
std::atomic<bool> use_parallel{false};
#endif

}  // namespace

void set_parallel(bool enabled) { use_parallel.store(enabled); }
bool parallel_enabled() { return use_parallel.load(); }

bool openmp_available() {
#ifdef L2NET_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

#define L2NET_DISPATCH(name, ...)                                 \
  if (use_parallel.load(std::memory_order_relaxed)) {             \
    parallel::name(__VA_ARGS__);                                  \
  } else {                                                        \
    serial::name(__VA_ARGS__);                                    \
  }

void conv2d_forward(std::span<const double> in, std::span<const double> wt,
                    std::span<const double> bias, const ConvGeom& g,
                    std::span<double> out) {
  L2NET_DISPATCH(conv2d_forward, in, wt, bias, g, out)
}

void conv2d_backward_input(std::span<const double> gout,
                           std::span<const double> wt, const ConvGeom& g,
                           std::span<double> gin) {
  L2NET_DISPATCH(conv2d_backward_input, gout, wt, g, gin)
}

void conv2d_backward_params(std::span<const double> gout,
                            std::span<const double> in, const ConvGeom& g,
                            std::span<double> gwt, std::span<double> gbias) {
  L2NET_DISPATCH(conv2d_backward_params, gout, in, g, gwt, gbias)
}

void l2pool_forward(std::span<const double> in, const PoolGeom& g,
                    bool normalized, std::span<double> out) {
  L2NET_DISPATCH(l2pool_forward, in, g, normalized, out)
}

void l2pool_backward(std::span<const double> in, std::span<const double> gout,
                     const PoolGeom& g, bool normalized, L2Backward mode,
                     double epsilon, std::span<double> gin) {
  L2NET_DISPATCH(l2pool_backward, in, gout, g, normalized, mode, epsilon, gin)
}

void maxpool_forward(std::span<const double> in, const PoolGeom& g,
                     std::span<double> out, std::span<std::size_t> argmax) {
  L2NET_DISPATCH(maxpool_forward, in, g, out, argmax)
}

void maxpool_backward(std::span<const double> gout,
                      std::span<const std::size_t> argmax, const PoolGeom& g,
                      std::span<double> gin) {
  L2NET_DISPATCH(maxpool_backward, gout, argmax, g, gin)
}

void matmul(std::span<const double> a, std::span<const double> b,
            std::size_t m, std::size_t k, std::size_t n,
            std::span<double> out) {
  L2NET_DISPATCH(matmul, a, b, m, k, n, out)
}

#undef L2NET_DISPATCH

}  // namespace l2net::kernels
