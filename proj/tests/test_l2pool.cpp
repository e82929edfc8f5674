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

#include <gtest/gtest.h>

#include <random>

#include "l2net/autograd.hpp"
#include "l2net/error.hpp"
#include "l2net/gradcheck.hpp"
#include "l2net/l2pool.hpp"
#include "l2net/ops.hpp"
#include "oracles.hpp"

using namespace l2net;

namespace {

L2PoolConfig cfg_of(std::size_t f, std::size_t s, bool normalized = false,
                    GradientMode mode = GradientMode::kAnalytic) {
  L2PoolConfig c;
  c.filter_size = f;
  c.stride = s;
  c.normalized = normalized;
  c.gradient_mode = mode;
  return c;
}

}  // namespace

TEST(L2Pool, ShapeLaw224To112) {
  const Tensor x = Tensor::zeros({64, 224, 224});
  EXPECT_EQ(l2_pool_forward(x, cfg_of(2, 2)).shape(), (Shape{64, 112, 112}));
}

TEST(L2Pool, ThreeFourFive) {
  const Tensor x = Tensor::create({1, 2, 2}, {3, 4, 0, 0});
  EXPECT_EQ(l2_pool_forward(x, cfg_of(2, 2)).values(), (std::vector<double>{5.0}));
  EXPECT_EQ(l2_pool_forward(x, cfg_of(2, 2, true)).values(), (std::vector<double>{2.5}));
  const auto g = l2_pool_backward(x, Tensor::create({1, 1, 1}, {1.0}), cfg_of(2, 2));
  EXPECT_DOUBLE_EQ(g[0], 0.6);
  EXPECT_DOUBLE_EQ(g[1], 0.8);
  EXPECT_EQ(g[2], 0.0);
}

TEST(L2Pool, ZeroInputAndZeroGradient) {
  const Tensor x = Tensor::zeros({2, 4, 4});
  const auto y = l2_pool_forward(x, cfg_of(2, 2));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
  const auto g = l2_pool_backward(x, Tensor::full({2, 2, 2}, 1.0), cfg_of(2, 2));
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(L2Pool, PaperLiteralGradientIsTheEquationAsPrinted) {
  // n * g / (2 |w|) for every element, independent of the element itself.
  const Tensor x = Tensor::create({1, 2, 2}, {3, 4, 0, 0});
  const auto g = l2_pool_backward(x, Tensor::create({1, 1, 1}, {1.0}),
                                  cfg_of(2, 2, false, GradientMode::kPaperLiteral));
  for (double v : g.values()) EXPECT_DOUBLE_EQ(v, 4.0 / (2.0 * 5.0));
}

TEST(L2Pool, WindowLargerThanInput) {
  try {
    l2_pool_forward(Tensor::zeros({1, 2, 5}), cfg_of(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWindowLargerThanInput);
  }
}

TEST(L2Pool, ConfigValidation) {
  EXPECT_THROW(cfg_of(0, 1).validate(), Error);
  EXPECT_THROW(cfg_of(2, 0).validate(), Error);
  L2PoolConfig c;
  EXPECT_LE(c.epsilon, 1e-6);
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(L2Pool, MatchesNaiveReferenceExactly) {
  std::mt19937_64 rng(17);
  for (int c = 1; c <= 4; ++c)
    for (int h : {3, 6, 9, 16})
      for (int w : {3, 7, 16})
        for (int f : {1, 2, 3})
          for (int s : {1, 2})
            for (bool normalized : {false, true}) {
              const auto v = oracle::random_vector(static_cast<std::size_t>(c * h * w), rng);
              const Tensor x = Tensor::create({static_cast<std::size_t>(c), static_cast<std::size_t>(h),
                                               static_cast<std::size_t>(w)}, v);
              const auto got = l2_pool_forward(x, cfg_of(f, s, normalized));
              EXPECT_EQ(got.values(), oracle::l2pool(v, c, h, w, f, s, normalized))
                  << c << "x" << h << "x" << w << " f" << f << " s" << s;
            }
}

TEST(L2Pool, AnalyticBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  for (bool normalized : {false, true}) {
    const Tensor x = Tensor::create({1, 8, 8}, oracle::random_vector(64, rng, 0.2, 1.0));
    const auto cfg = cfg_of(2, 2, normalized);
    const auto analytic = l2_pool_backward(x, Tensor::full({1, 4, 4}, 1.0), cfg);
    const auto numeric = finite_difference_grad(
        [&](const Tensor& t) { return sum(l2_pool_forward(t, cfg)).item(); }, x);
    EXPECT_LT(relative_error(analytic.data(), numeric.data()), 1e-4);
  }
}

TEST(L2Pool, OverlappingWindowsAccumulate) {
  // f=2, s=1 on a 1x1x3 row: the middle element sits in both windows.
  const Tensor x = Tensor::create({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  const auto cfg = cfg_of(2, 1);
  const auto g = l2_pool_backward(x, Tensor::full({1, 1, 2}, 1.0), cfg);
  const double n0 = std::sqrt(1 + 4 + 16 + 25.0), n1 = std::sqrt(4 + 9 + 25 + 36.0);
  EXPECT_DOUBLE_EQ(g[1], 2 / n0 + 2 / n1);
  EXPECT_DOUBLE_EQ(g[0], 1 / n0);
}

TEST(L2Pool, TapeVersionMatchesRawBackward) {
  std::mt19937_64 rng(29);
  const Tensor x = Tensor::create({2, 6, 6}, oracle::random_vector(72, rng), true);
  const auto cfg = cfg_of(3, 3);
  GradTape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(l2_pool(x, cfg));
  }
  const auto raw = l2_pool_backward(x, Tensor::full({2, 2, 2}, 1.0), cfg);
  EXPECT_EQ(backward(tape, loss).of(x).values(), raw.values());
}

TEST(GlobalL2Pool, Examples) {
  EXPECT_EQ(global_l2_pool(Tensor::full({1, 2, 2}, 1.0)).values(), (std::vector<double>{2.0}));
  EXPECT_EQ(global_l2_pool(Tensor::create({1, 2, 2}, {0, 0, 1, 0})).values(),
            (std::vector<double>{1.0}));
  std::mt19937_64 rng(31);
  const Tensor x = Tensor::create({3, 5, 5}, oracle::random_vector(75, rng));
  EXPECT_EQ(global_l2_pool(x).values(), l2_pool_forward(x, cfg_of(5, 1)).values());
}

TEST(GlobalL2Pool, RectangularPlanes) {
  const Tensor x = Tensor::create({2, 1, 3}, {1, 2, 2, 0, 3, 4});
  EXPECT_EQ(global_l2_pool(x).values(), (std::vector<double>{3.0, 5.0}));
}

TEST(L2PoolGradcheck, PaperLiteralIsAnExpectedFailure) {
  GradcheckOptions opts;
  const auto analytic = check_l2_pool(opts);
  EXPECT_EQ(analytic.status, CheckStatus::kPass);
  EXPECT_LT(analytic.max_rel_error, 1e-4);
  const auto literal = check_l2_pool_paper_literal(opts);
  EXPECT_EQ(literal.status, CheckStatus::kExpectedFail);
  EXPECT_GE(literal.discrepancies, 95u);
  EXPECT_EQ(to_string(literal.status), "EXPECTED FAIL");
}
