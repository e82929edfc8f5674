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

// Serial reference kernels against their OpenMP counterparts. Each benchmark
// is registered twice with the variant as the last argument (0 serial,
// 1 parallel); set OMP_NUM_THREADS to control the thread count. Timings are
// wall clock, since the CPU column only counts the calling thread.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "l2net/kernels.hpp"
#include "l2net/pyramid.hpp"
#include "l2net/tensor.hpp"

namespace k = l2net::kernels;

namespace {

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_Conv2dForward(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const bool par = state.range(1) != 0;
  const k::ConvGeom g{c, 64, 64, c, 3, 1, 1, 64, 64};
  const auto in = random_buffer(c * 64 * 64, 1);
  const auto wt = random_buffer(c * c * 9, 2);
  const auto bias = random_buffer(c, 3);
  std::vector<double> out(c * 64 * 64);
  for (auto _ : state) {
    if (par) {
      k::parallel::conv2d_forward(in, wt, bias, g, out);
    } else {
      k::serial::conv2d_forward(in, wt, bias, g, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(out.size()));
}

void BM_Conv2dBackward(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const bool par = state.range(1) != 0;
  const k::ConvGeom g{c, 64, 64, c, 3, 1, 1, 64, 64};
  const auto in = random_buffer(c * 64 * 64, 1);
  const auto wt = random_buffer(c * c * 9, 2);
  const auto gout = random_buffer(c * 64 * 64, 3);
  std::vector<double> gin(in.size()), gwt(wt.size()), gbias(c);
  for (auto _ : state) {
    if (par) {
      k::parallel::conv2d_backward_input(gout, wt, g, gin);
      k::parallel::conv2d_backward_params(gout, in, g, gwt, gbias);
    } else {
      k::serial::conv2d_backward_input(gout, wt, g, gin);
      k::serial::conv2d_backward_params(gout, in, g, gwt, gbias);
    }
    benchmark::DoNotOptimize(gin.data());
    benchmark::DoNotOptimize(gwt.data());
  }
}

void BM_L2Pool(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const bool par = state.range(1) != 0;
  const k::PoolGeom g{c, 224, 224, 2, 2, 112, 112};
  const auto in = random_buffer(c * 224 * 224, 4);
  const auto gout = random_buffer(c * 112 * 112, 5);
  std::vector<double> out(gout.size()), gin(in.size());
  for (auto _ : state) {
    if (par) {
      k::parallel::l2pool_forward(in, g, false, out);
      k::parallel::l2pool_backward(in, gout, g, false, k::L2Backward::kAnalytic, 1e-12, gin);
    } else {
      k::serial::l2pool_forward(in, g, false, out);
      k::serial::l2pool_backward(in, gout, g, false, k::L2Backward::kAnalytic, 1e-12, gin);
    }
    benchmark::DoNotOptimize(gin.data());
  }
}

void BM_MaxPool(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const bool par = state.range(1) != 0;
  const k::PoolGeom g{c, 224, 224, 2, 2, 112, 112};
  const auto in = random_buffer(c * 224 * 224, 6);
  const auto gout = random_buffer(c * 112 * 112, 7);
  std::vector<double> out(gout.size()), gin(in.size());
  std::vector<std::size_t> argmax(gout.size());
  for (auto _ : state) {
    if (par) {
      k::parallel::maxpool_forward(in, g, out, argmax);
      k::parallel::maxpool_backward(gout, argmax, g, gin);
    } else {
      k::serial::maxpool_forward(in, g, out, argmax);
      k::serial::maxpool_backward(gout, argmax, g, gin);
    }
    benchmark::DoNotOptimize(gin.data());
  }
}

void BM_Matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const bool par = state.range(1) != 0;
  const auto a = random_buffer(n * n, 8), b = random_buffer(n * n, 9);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    if (par) {
      k::parallel::matmul(a, b, n, n, n, out);
    } else {
      k::serial::matmul(a, b, n, n, n, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_PyramidBatch(benchmark::State& state) {
  const std::size_t rois = static_cast<std::size_t>(state.range(0));
  l2net::kernels::set_parallel(state.range(1) != 0);
  const std::size_t c = 64, h = 32, w = 32;
  const auto feature = l2net::Tensor::create({c, h, w}, random_buffer(c * h * w, 10));
  std::mt19937_64 rng(11);
  std::vector<l2net::RegionProposal> boxes;
  for (std::size_t i = 0; i < rois; ++i) {
    l2net::RegionProposal b;
    b.x0 = static_cast<int>(rng() % (w - 1));
    b.y0 = static_cast<int>(rng() % (h - 1));
    b.x1 = b.x0 + 1 + static_cast<int>(rng() % (w - b.x0 - 1));
    b.y1 = b.y0 + 1 + static_cast<int>(rng() % (h - b.y0 - 1));
    boxes.push_back(b);
  }
  const l2net::PyramidSpec spec;
  for (auto _ : state) {
    auto out = l2net::pyramid_pool_batch(feature, boxes, spec);
    benchmark::DoNotOptimize(out.values().data());
  }
  l2net::kernels::set_parallel(false);
}

}  // namespace

BENCHMARK(BM_Conv2dForward)->ArgsProduct({{16, 64}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Conv2dBackward)->ArgsProduct({{16, 64}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_L2Pool)->ArgsProduct({{16, 64}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MaxPool)->ArgsProduct({{16, 64}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Matmul)->ArgsProduct({{128, 256}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PyramidBatch)->ArgsProduct({{32, 256}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
