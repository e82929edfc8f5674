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

// Module invariants as seeded property tests; every test runs under three
// seeds.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "l2net/autograd.hpp"
#include "l2net/config.hpp"
#include "l2net/gradcheck.hpp"
#include "l2net/l2pool.hpp"
#include "l2net/layers.hpp"
#include "l2net/losses.hpp"
#include "l2net/metrics.hpp"
#include "l2net/model.hpp"
#include "l2net/ops.hpp"
#include "l2net/proposals.hpp"
#include "l2net/pyramid.hpp"
#include "l2net/schema.hpp"
#include "l2net/train.hpp"
#include "l2net/volume.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace l2net;
using testutil::code_of;

namespace {

class Seeded : public ::testing::TestWithParam<std::uint64_t> {
 protected:
  std::uint64_t seed() const { return GetParam(); }
  std::mt19937_64 rng{GetParam()};

  std::size_t pick(std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); }
  Tensor random(Shape shape, double lo = -1.0, double hi = 1.0) {
    const auto n = shape_numel(shape);
    return Tensor::create(std::move(shape), oracle::random_vector(n, rng, lo, hi));
  }
  RegionProposal random_box(int w, int h) {
    RegionProposal b;
    b.x0 = static_cast<int>(rng() % (w - 1));
    b.y0 = static_cast<int>(rng() % (h - 1));
    b.x1 = b.x0 + 1 + static_cast<int>(rng() % (w - b.x0));
    b.y1 = b.y0 + 1 + static_cast<int>(rng() % (h - b.y0));
    if (b.x1 > w) b.x1 = w;
    if (b.y1 > h) b.y1 = h;
    return b;
  }
};

// Pushes every element at least `gap` away from zero, keeping its sign.
Tensor away_from_zero(const Tensor& t, double gap) {
  std::vector<double> v = t.values();
  for (double& x : v) x = x < 0 ? std::min(x, -gap) : std::max(x, gap);
  return Tensor::create(t.shape(), v);
}

std::string tiny_classify_config(std::uint64_t seed) {
  return "task = classify\nsynth_volumes_per_class = 3\nsynth_depth = 6\nsynth_height = 16\n"
         "synth_width = 16\nepochs = 1\nchannels = 4\nblocks = 1\nbatch_size = 4\nseed = " +
         std::to_string(seed) + "\n";
}

}  // namespace

// ---- tensor-autograd ------------------------------------------------------

TEST_P(Seeded, TensorShapeMatchesDataAndRejectsNonFinite) {
  for (int t = 0; t < 50; ++t) {
    const Shape s{pick(1, 4), pick(1, 5), pick(1, 5)};
    const auto x = random(s);
    EXPECT_EQ(x.numel(), shape_numel(x.shape()));
    const auto y = relu(add(x, x));
    EXPECT_EQ(y.numel(), shape_numel(y.shape()));
    std::vector<double> bad = x.values();
    bad[rng() % bad.size()] = (t % 2) ? NAN : INFINITY;
    EXPECT_EQ(code_of([&] { Tensor::create(s, bad); }), ErrorCode::kNonFiniteInput);
    std::vector<double> shorter(x.numel() + 1, 0.0);
    EXPECT_EQ(code_of([&] { Tensor::create(s, shorter); }), ErrorCode::kShapeMismatch);
  }
}

TEST_P(Seeded, TapeIsTopologicalAndGradientsMatchShapes) {
  const Tensor w1 = random({4, 6}).with_grad(), b1 = random({6}).with_grad();
  const Tensor w2 = random({6, 3}).with_grad(), x = random({2, 4});
  const Tensor unused = random({3}).with_grad();
  GradTape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    const Tensor h = relu(linear(x, w1, b1));
    loss = softmax_cross_entropy(matmul(h, w2), {static_cast<std::size_t>(rng() % 3), 1});
  }
  std::set<TensorId> seen;
  for (const auto& node : tape.nodes()) {
    for (auto id : node.inputs) {
      if (tape.produced(id)) {
        EXPECT_TRUE(seen.contains(id));
      }
    }
    seen.insert(node.output);
  }
  const auto g = backward(tape, loss);
  for (const Tensor* t : {&w1, &b1, &w2}) {
    EXPECT_TRUE(g.has(*t));
    EXPECT_EQ(g.of(*t).shape(), t->shape());
  }
  EXPECT_EQ(g.of(unused).shape(), unused.shape());
  // Deterministic: a second pass over the same tape is bit-identical.
  const auto again = backward(tape, loss);
  for (const Tensor* t : {&w1, &b1, &w2}) EXPECT_EQ(g.of(*t).values(), again.of(*t).values());
}

TEST_P(Seeded, PrimitiveOpGradientsMatchFiniteDifferences) {
  Rng r(seed());
  for (int t = 0; t < 20; ++t) {
    const Shape s{pick(1, 3), pick(1, 4)};
    const Tensor a = random(s), b = random(s);
    const Tensor m = random({s[1], pick(1, 4)}), bias = random({m.dim(1)});
    const std::vector<std::pair<const char*, double>> errs{
        {"add", gradient_relative_error([](auto& v) { return add(v[0], v[1]); }, {a, b}, r)},
        {"sub", gradient_relative_error([](auto& v) { return sub(v[0], v[1]); }, {a, b}, r)},
        {"mul", gradient_relative_error([](auto& v) { return mul(v[0], v[1]); }, {a, b}, r)},
        {"scale", gradient_relative_error([](auto& v) { return scale(v[0], -1.7); }, {a}, r)},
        {"sum", gradient_relative_error([](auto& v) { return sum(v[0]); }, {a}, r)},
        {"relu", gradient_relative_error([](auto& v) { return relu(v[0]); },
                                         {away_from_zero(a, 1e-3)}, r)},
        {"matmul", gradient_relative_error([](auto& v) { return matmul(v[0], v[1]); }, {a, m}, r)},
        {"linear", gradient_relative_error([](auto& v) { return linear(v[0], v[1], v[2]); },
                                           {a, m, bias}, r)},
        {"reshape", gradient_relative_error(
                        [](auto& v) { return reshape(v[0], {v[0].numel()}); }, {a}, r)},
        {"stack", gradient_relative_error([](auto& v) { return stack({v[0], v[1]}); }, {a, b}, r)},
        {"concat", gradient_relative_error([](auto& v) { return concat({v[0], v[1]}); }, {a, b}, r)},
        {"slice_rows", gradient_relative_error(
                           [](auto& v) { return slice_rows(v[0], 0, v[0].dim(0)); }, {a}, r)},
    };
    for (const auto& [name, err] : errs) EXPECT_LT(err, 1e-4) << name;
  }
}

TEST_P(Seeded, ElementwiseAddMulCommute) {
  for (int t = 0; t < 100; ++t) {
    const Shape s{pick(1, 4), pick(1, 6)};
    const Tensor a = random(s, -1e3, 1e3), b = random(s, -1e-3, 1e-3);
    EXPECT_EQ(add(a, b).values(), add(b, a).values());
    EXPECT_EQ(mul(a, b).values(), mul(b, a).values());
  }
}

// ---- l2norm-unit ------------------------------------------------------------

TEST_P(Seeded, L2PoolNonNegativeScaleEquivariantAndDominated) {
  for (int t = 0; t < 100; ++t) {
    L2PoolConfig cfg;
    cfg.filter_size = pick(1, 3);
    cfg.stride = pick(1, 2);
    const Tensor x = random({pick(1, 4), pick(cfg.filter_size, 10), pick(cfg.filter_size, 10)});
    const auto y = l2_pool_forward(x, cfg);
    for (double v : y.values()) EXPECT_GE(v, 0.0);
    for (double alpha : {-2.0, 0.5, 3.0}) {
      const auto ys = l2_pool_forward(scale(x, alpha), cfg);
      for (std::size_t i = 0; i < y.numel(); ++i)
        EXPECT_LE(std::abs(ys[i] - std::abs(alpha) * y[i]), 1e-12 * std::abs(alpha) * y[i] + 1e-300);
    }
    const std::size_t f = cfg.filter_size, s = cfg.stride, h = x.dim(1), w = x.dim(2);
    const std::size_t ho = y.dim(1), wo = y.dim(2);
    for (std::size_t c = 0; c < x.dim(0); ++c)
      for (std::size_t oy = 0; oy < ho; ++oy)
        for (std::size_t ox = 0; ox < wo; ++ox) {
          double mx = 0.0;
          for (std::size_t dy = 0; dy < f; ++dy)
            for (std::size_t dx = 0; dx < f; ++dx)
              mx = std::max(mx, std::abs(x[(c * h + oy * s + dy) * w + ox * s + dx]));
          const double v = y[(c * ho + oy) * wo + ox];
          EXPECT_GE(v, mx);
          EXPECT_LE(v, std::sqrt(static_cast<double>(f * f)) * mx * (1 + 1e-15));
        }
  }
}

TEST_P(Seeded, L2PoolEqualsNaiveReference) {
  for (int t = 0; t < 100; ++t) {
    const int f = static_cast<int>(pick(1, 3)), s = static_cast<int>(pick(1, 2));
    const int c = static_cast<int>(pick(1, 4)), h = static_cast<int>(pick(f, 16)),
              w = static_cast<int>(pick(f, 16));
    const bool normalized = rng() % 2;
    const auto v = oracle::random_vector(static_cast<std::size_t>(c * h * w), rng);
    L2PoolConfig cfg;
    cfg.filter_size = f;
    cfg.stride = s;
    cfg.normalized = normalized;
    const auto y = l2_pool_forward(
        Tensor::create({static_cast<std::size_t>(c), static_cast<std::size_t>(h),
                        static_cast<std::size_t>(w)}, v), cfg);
    EXPECT_EQ(y.values(), oracle::l2pool(v, c, h, w, f, s, normalized));
  }
}

TEST_P(Seeded, L2PoolAnalyticPassesAndPaperLiteralFails) {
  GradcheckOptions opts;
  opts.seed = seed();
  opts.trials = 100;
  const auto analytic = check_l2_pool(opts);
  EXPECT_EQ(analytic.status, CheckStatus::kPass) << analytic.max_rel_error;
  const auto literal = check_l2_pool_paper_literal(opts);
  EXPECT_EQ(literal.status, CheckStatus::kExpectedFail);
  EXPECT_GE(literal.discrepancies, 95u);
}

TEST_P(Seeded, NonOverlappingWindowsShareNoInput) {
  for (int t = 0; t < 30; ++t) {
    L2PoolConfig cfg;
    cfg.filter_size = pick(1, 3);
    cfg.stride = pick(cfg.filter_size, 3);
    const Tensor x = away_from_zero(random({pick(1, 2), pick(3, 9), pick(3, 9)}), 1e-3);
    const auto y = l2_pool_forward(x, cfg);
    std::vector<int> owners(x.numel(), 0);
    for (std::size_t o = 0; o < y.numel(); ++o) {
      std::vector<double> up(y.numel(), 0.0);
      up[o] = 1.0;
      const auto g = l2_pool_backward(x, Tensor::create(y.shape(), up), cfg);
      for (std::size_t i = 0; i < g.numel(); ++i) owners[i] += g[i] != 0.0;
    }
    for (int n : owners) EXPECT_LE(n, 1);
  }
}

// ---- nn-layers --------------------------------------------------------------

TEST_P(Seeded, LayerAndLossGradientsMatchFiniteDifferences) {
  GradcheckOptions opts;
  opts.seed = seed();
  opts.trials = 25;
  for (const auto& r : run_gradcheck("layers", opts)) {
    EXPECT_TRUE(r.status == CheckStatus::kPass || r.status == CheckStatus::kExpectedFail)
        << r.name << " " << r.max_rel_error;
  }
}

TEST_P(Seeded, ZeroBodyResidualIsIdentity) {
  Rng r(seed());
  for (int t = 0; t < 10; ++t) {
    const std::size_t c = pick(1, 4);
    auto block = ResidualBlock::make(t % 2 ? ResidualVariant::kDense : ResidualVariant::kVanilla,
                                     c, 2 * pick(0, 2) + 1, r);
    for (auto& st : block.body) {
      st.conv.weight = Tensor::zeros(st.conv.weight.shape());
      st.conv.bias = Tensor::zeros(st.conv.bias.shape());
    }
    const Tensor x = random({c, pick(5, 10), pick(5, 10)});
    EXPECT_EQ(residual_forward(x, block).values(), x.values());
  }
}

TEST_P(Seeded, ConvEqualsNaiveReference) {
  for (int t = 0; t < 60; ++t) {
    const int ci = static_cast<int>(pick(1, 4)), co = static_cast<int>(pick(1, 4));
    const int k = static_cast<int>(pick(1, 5)), stride = static_cast<int>(pick(1, 2)),
              pad = static_cast<int>(pick(0, 2));
    const int h = static_cast<int>(pick(std::max(1, k - 2 * pad), 12));
    const int w = static_cast<int>(pick(std::max(1, k - 2 * pad), 12));
    const auto in = oracle::random_vector(static_cast<std::size_t>(ci * h * w), rng);
    const auto wt = oracle::random_vector(static_cast<std::size_t>(co * ci * k * k), rng);
    const auto b = oracle::random_vector(static_cast<std::size_t>(co), rng);
    ConvLayer layer;
    layer.weight = Tensor::create({static_cast<std::size_t>(co), static_cast<std::size_t>(ci),
                                   static_cast<std::size_t>(k), static_cast<std::size_t>(k)}, wt);
    layer.bias = Tensor::create({static_cast<std::size_t>(co)}, b);
    layer.stride = stride;
    layer.padding = pad;
    int ho = 0, wo = 0;
    const auto ref = oracle::conv2d(in, ci, h, w, wt, b, co, k, stride, pad, &ho, &wo);
    const auto got = conv2d(Tensor::create({static_cast<std::size_t>(ci), static_cast<std::size_t>(h),
                                            static_cast<std::size_t>(w)}, in), layer);
    EXPECT_EQ(got.values(), ref);
  }
}

TEST_P(Seeded, LossesNonNegativeWithExactLimits) {
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = pick(1, 4), k = pick(2, 5);
    Labels y;
    for (std::size_t i = 0; i < n; ++i) y.push_back(rng() % k);
    const Tensor z = random({n, k}, -5, 5);
    EXPECT_GE(softmax_cross_entropy(z, y).item(), 0.0);
    EXPECT_GE(multiclass_hinge(z, y).item(), 0.0);
    EXPECT_GE(smooth_l1_bbox(random({n, 4}), random({n, 4})).item(), 0.0);
    // Margins satisfied by construction: hinge is exactly zero.
    std::vector<double> sat = z.values();
    for (std::size_t i = 0; i < n; ++i) sat[i * k + y[i]] = 10.0;
    EXPECT_EQ(multiclass_hinge(Tensor::create({n, k}, sat), y).item(), 0.0);
    // One-hot limit: the loss vanishes.
    std::vector<double> onehot(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) onehot[i * k + y[i]] = 800.0;
    EXPECT_EQ(softmax_cross_entropy(Tensor::create({n, k}, onehot), y).item(), 0.0);
  }
}

TEST_P(Seeded, LossBundleTotalIsExactSum) {
  for (int t = 0; t < 200; ++t) {
    const Tensor cls = Tensor::scalar(oracle::random_vector(1, rng, 0, 10)[0]);
    const Tensor bbox = Tensor::scalar(oracle::random_vector(1, rng, 0, 10)[0]);
    const double w = oracle::random_vector(1, rng, 0, 3)[0];
    const auto lb = detection_loss(cls, bbox, w);
    EXPECT_EQ(lb.total.item(), lb.cls_loss.item() + lb.bbox_loss.item());
  }
}

// ---- pyramid-roi ------------------------------------------------------------

TEST_P(Seeded, PyramidLengthConstantAndBinsPartition) {
  PyramidSpec spec;
  const std::size_t c = pick(1, 5);
  const Tensor f = random({c, 16, 16});
  for (int t = 0; t < 200; ++t) {
    const auto b = random_box(16, 16);
    EXPECT_EQ(pyramid_pool({b, f}, spec).numel(), spec.output_length(c));
  }
  for (int t = 0; t < 100; ++t) {
    const int extent = static_cast<int>(pick(4, 64));
    for (std::size_t g : spec.levels) {
      std::vector<int> hits(extent, 0);
      for (const auto& bin : pyramid_bins(extent, g))
        for (int i = bin.begin; i < bin.end; ++i) ++hits[i];
      for (int h : hits) EXPECT_EQ(h, 1);
    }
  }
}

TEST_P(Seeded, PyramidL2EqualsDirectSubWindowNorms) {
  for (int t = 0; t < 100; ++t) {
    const std::size_t c = pick(1, 3), h = pick(2, 12), w = pick(2, 12);
    const Tensor f = random({c, h, w});
    const auto b = random_box(static_cast<int>(w), static_cast<int>(h));
    PyramidSpec spec;
    const auto got = pyramid_pool({b, f}, spec);
    std::size_t o = 0;
    for (std::size_t g : spec.levels)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (const auto& by : pyramid_bins(b.height(), g))
          for (const auto& bx : pyramid_bins(b.width(), g)) {
            double ss = 0;
            for (int y = b.y0 + by.begin; y < b.y0 + by.end; ++y)
              for (int x = b.x0 + bx.begin; x < b.x0 + bx.end; ++x) {
                const double v = f[(ch * h + y) * w + x];
                ss += v * v;
              }
            EXPECT_EQ(got[o++], std::sqrt(ss));
          }
  }
}

TEST_P(Seeded, PyramidGradientsMatchFiniteDifferences) {
  GradcheckOptions opts;
  opts.seed = seed();
  opts.trials = 30;
  for (auto kind : {PoolKind::kL2, PoolKind::kMax}) {
    const auto r = check_pyramid(opts, kind);
    EXPECT_EQ(r.status, CheckStatus::kPass) << r.name << " " << r.max_rel_error;
  }
}

// ---- proposals --------------------------------------------------------------

TEST_P(Seeded, IouSymmetricBoundedAndOneOnlyForIdentical) {
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_box(12, 12), b = random_box(12, 12);
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v == 1.0, a.same_box(b));
  }
}

TEST_P(Seeded, ProposalsDeterministic) {
  ProposalConfig cfg;
  cfg.seed = seed();
  for (int t = 0; t < 10; ++t) {
    const Tensor img = random({3, pick(16, 40), pick(16, 40)}, 0, 1);
    const auto a = generate_proposals(img, cfg), b = generate_proposals(img, cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].same_box(b[i]));
  }
}

TEST_P(Seeded, NmsSubsetDescendingAndSeparated) {
  for (int t = 0; t < 200; ++t) {
    std::vector<RegionProposal> in;
    for (std::size_t i = 0; i < pick(1, 30); ++i) {
      in.push_back(random_box(24, 24));
      in.back().score = oracle::random_vector(1, rng, 0, 1)[0];
    }
    const double thr = oracle::random_vector(1, rng, 0.1, 0.9)[0];
    const auto out = nms(in, thr);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_TRUE(std::any_of(in.begin(), in.end(), [&](const RegionProposal& p) {
        return p.same_box(out[i]) && p.score == out[i].score;
      }));
      if (i > 0) {
        EXPECT_LT(*out[i].score, *out[i - 1].score);
      }
      for (std::size_t j = 0; j < i; ++j) EXPECT_LE(iou(out[i], out[j]), thr);
    }
  }
}

TEST_P(Seeded, ForegroundLabelsRespectThreshold) {
  for (int t = 0; t < 200; ++t) {
    std::vector<GroundTruthBox> gt{{random_box(32, 32), 1}};
    if (rng() % 2) gt.push_back({random_box(32, 32), 2});
    std::vector<RegionProposal> props;
    for (int i = 0; i < 15; ++i) props.push_back(random_box(32, 32));
    const double fg = oracle::random_vector(1, rng, 0.2, 0.9)[0];
    for (const auto& lp : label_proposals(props, gt, fg, fg * 0.5)) {
      if (lp.cls > 0) {
        EXPECT_GE(lp.max_iou, fg);
      }
      double best = 0;
      for (const auto& g : gt) best = std::max(best, iou(lp.proposal, g.box));
      EXPECT_EQ(lp.max_iou, best);
    }
  }
}

// ---- data-pipeline ----------------------------------------------------------

TEST_P(Seeded, SlicesInUnitRangeAndCountsPerView) {
  SynthConfig cfg;
  cfg.seed = seed();
  cfg.volumes_per_class = 1;
  cfg.depth = 6;
  cfg.height = 16;
  cfg.width = 20;
  const std::vector<std::string> triple{"T1", "T1c", "FLAIR"};
  for (const auto& vol : generate_synthetic_dataset(cfg)) {
    std::size_t total = 0;
    for (auto view : {View::kAxial, View::kCoronal, View::kSagittal}) {
      const auto slices = extract_slices(vol, view, false, triple);
      total += slices.size();
      for (const auto& s : slices) {
        for (const auto& a : augment(s, {{AugmentOp::Kind::kHFlip},
                                         {AugmentOp::Kind::kVFlip},
                                         {AugmentOp::Kind::kScale, 0.75},
                                         {AugmentOp::Kind::kScale, 1.25}})) {
          EXPECT_EQ(a.label, s.label);
          EXPECT_EQ(a.image.dim(0), 3u);
          for (double v : a.image.values()) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
          }
          for (const auto& b : a.boxes) {
            EXPECT_TRUE(b.box.valid());
            EXPECT_GE(b.box.x0, 0);
            EXPECT_GE(b.box.y0, 0);
            EXPECT_LE(b.box.x1, static_cast<int>(a.image.dim(2)));
            EXPECT_LE(b.box.y1, static_cast<int>(a.image.dim(1)));
          }
        }
        const auto hh = hflip(hflip(s)), vv = vflip(vflip(s));
        EXPECT_EQ(hh.image.values(), s.image.values());
        EXPECT_EQ(vv.image.values(), s.image.values());
        ASSERT_EQ(hh.boxes.size(), s.boxes.size());
        for (std::size_t i = 0; i < s.boxes.size(); ++i) {
          EXPECT_TRUE(hh.boxes[i].box.same_box(s.boxes[i].box));
          EXPECT_TRUE(vv.boxes[i].box.same_box(s.boxes[i].box));
        }
      }
    }
    EXPECT_EQ(total, 6u + 16u + 20u);
  }
}

TEST_P(Seeded, SplitsDisjointDeterministicVolumeLevel) {
  for (const char* task : {"classify", "detect"}) {
    RunConfig cfg = parse_config(std::string("task = ") + task +
                                 "\nsynth_volumes_per_class = 4\nsynth_detection_volumes = 12\n"
                                 "synth_depth = 4\nsynth_height = 16\nsynth_width = 16\n");
    cfg.seed = seed();
    const auto a = make_dataset(cfg), b = make_dataset(cfg);
    EXPECT_EQ(a.split_of, b.split_of);
    std::set<std::string> ids;
    for (const auto& name : split_names(cfg.task)) {
      EXPECT_FALSE(a.split(name).empty()) << name;
      for (const auto* v : a.split(name)) EXPECT_TRUE(ids.insert(v->id).second) << v->id;
    }
    EXPECT_EQ(ids.size(), a.volumes.size());
  }
}

// ---- metrics-report ---------------------------------------------------------

TEST_P(Seeded, MetricPropertiesOnRandomMatrices) {
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = pick(2, 5);
    ConfusionMatrix cm(k), diag(k);
    std::vector<std::vector<long>> m(k, std::vector<long>(k, 0));
    for (std::size_t a = 0; a < k; ++a) {
      diag.add(a, a, pick(1, 5));
      for (std::size_t p = 0; p < k; ++p) {
        m[a][p] = static_cast<long>(rng() % 5);
        cm.add(a, p, static_cast<std::uint64_t>(m[a][p]));
      }
    }
    if (cm.total() == 0) continue;
    const auto r = derive_metrics(cm);
    EXPECT_EQ(r.accuracy, static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
    bool diagonal = true;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t p = 0; p < k; ++p) diagonal &= a == p || m[a][p] == 0;
    if (!r.kappa_degenerate) {
      EXPECT_EQ(r.kappa == 1.0, diagonal);
      EXPECT_NEAR(r.kappa, oracle::kappa(m), 1e-12);
    }
    const auto d = derive_metrics(diag);
    EXPECT_EQ(d.kappa, 1.0);
    EXPECT_EQ(d.sensitivity, 1.0);
  }
  // Rows proportional to the column marginals give kappa 0.
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = pick(2, 4);
    std::vector<std::uint64_t> col(k), row(k);
    for (auto& c : col) c = pick(1, 4);
    for (auto& r : row) r = pick(1, 4);
    ConfusionMatrix cm(k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t p = 0; p < k; ++p) cm.add(a, p, row[a] * col[p]);
    EXPECT_NEAR(derive_metrics(cm).kappa, 0.0, 1e-12);
  }
}

TEST_P(Seeded, DiceSymmetricBoundedReflexive) {
  for (int t = 0; t < 500; ++t) {
    Mask a(10, 10), b(10, 10);
    for (auto& bit : a.bits) bit = rng() % 3 == 0;
    for (auto& bit : b.bits) bit = rng() % 3 == 0;
    const double d = dice(a, b);
    EXPECT_EQ(d, dice(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    std::vector<int> va(a.bits.begin(), a.bits.end()), vb(b.bits.begin(), b.bits.end());
    EXPECT_NEAR(d, oracle::dice(va, vb), 1e-12);
    if (a.count() > 0) {
      EXPECT_EQ(dice(a, a), 1.0);
    }
  }
}

// ---- cli-harness ------------------------------------------------------------

TEST_P(Seeded, TrainingIsReproducibleAndArtifactsConform) {
  const RunConfig cfg = parse_config(tiny_classify_config(seed()));
  const auto data = make_dataset(cfg);
  auto a = train_classifier(cfg, data);
  auto b = train_classifier(cfg, data);
  EXPECT_EQ(report_to_json(a.report), report_to_json(b.report));
  EXPECT_EQ(curve_to_csv(a.curve), curve_to_csv(b.curve));
  auto pa = a.net.parameters(), pb = b.net.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].tensor->values(), pb[i].tensor->values());

  testutil::ScratchDir dir("props-" + std::to_string(seed()));
  write_dataset(dir / "data", data, cfg);
  save_classifier(dir / "checkpoint", a.net, cfg);
  emit_curve(a.curve, dir / "curve.csv");
  emit_report(a.report, dir / "report.json", ReportFormat::kJson);
  emit_report(a.report, dir / "report.csv", ReportFormat::kCsv);
  for (const auto& r : schema_check(dir.path().string())) EXPECT_TRUE(r.ok) << r.path << ": " << r.message;
}

TEST_P(Seeded, DivergenceLeavesNoCheckpoint) {
  RunConfig cfg = parse_config(tiny_classify_config(seed()) + "learning_rate = 1e12\n");
  const auto data = make_dataset(cfg);
  EXPECT_EQ(code_of([&] { train_classifier(cfg, data); }), ErrorCode::kDivergedLoss);
}

INSTANTIATE_TEST_SUITE_P(ThreeSeeds, Seeded, ::testing::Values(11u, 2024u, 90210u));
