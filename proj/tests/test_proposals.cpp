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

#include <cmath>
#include <random>
#include <sstream>

#include "l2net/proposals.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace l2net;
using testutil::code_of;

namespace {

RegionProposal box(int x0, int y0, int x1, int y1, std::optional<double> score = {}) {
  RegionProposal b;
  b.x0 = x0;
  b.y0 = y0;
  b.x1 = x1;
  b.y1 = y1;
  b.score = score;
  return b;
}

oracle::Box ob(const RegionProposal& b) { return {b.x0, b.y0, b.x1, b.y1}; }

RegionProposal random_box(std::mt19937_64& rng, int extent) {
  const int x0 = static_cast<int>(rng() % (extent - 1)), y0 = static_cast<int>(rng() % (extent - 1));
  return box(x0, y0, x0 + 1 + static_cast<int>(rng() % (extent - x0 - 1) + 0),
             y0 + 1 + static_cast<int>(rng() % (extent - y0 - 1) + 0));
}

Tensor square_image(int size, int x0, int y0, int x1, int y1) {
  std::vector<double> v(static_cast<std::size_t>(3 * size * size), 0.05);
  for (int c = 0; c < 3; ++c)
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) v[(c * size + y) * size + x] = 0.9;
  return Tensor::create({3, static_cast<std::size_t>(size), static_cast<std::size_t>(size)}, v);
}

}  // namespace

TEST(Iou, Examples) {
  EXPECT_EQ(iou(box(1, 2, 5, 7), box(1, 2, 5, 7)), 1.0);
  EXPECT_EQ(iou(box(0, 0, 2, 2), box(5, 5, 7, 7)), 0.0);
  // Half-offset unit squares on a 2x pixel grid: 2x2 boxes shifted by one.
  EXPECT_DOUBLE_EQ(iou(box(0, 0, 2, 2), box(1, 0, 3, 2)), 1.0 / 3.0);
}

TEST(Iou, PropertiesAndOracle) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 2000; ++t) {
    const auto a = random_box(rng, 24), b = random_box(rng, 24);
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v == 1.0, a.same_box(b));
    EXPECT_NEAR(v, oracle::iou(ob(a), ob(b)), 1e-12);
  }
}

TEST(ClipBox, Behaviour) {
  const auto c = clip_box(box(-3, 2, 40, 9), 32, 32);
  ASSERT_TRUE(c.has_value());
  EXPECT_TRUE(c->same_box(box(0, 2, 32, 9)));
  EXPECT_FALSE(clip_box(box(40, 40, 50, 50), 32, 32).has_value());
}

TEST(GenerateProposals, BlankImageGivesWindowsOnly) {
  ProposalConfig cfg;
  const auto props = generate_proposals(Tensor::zeros({3, 32, 32}), cfg);
  ASSERT_FALSE(props.empty());
  EXPECT_LE(props.size(), cfg.max_proposals);
  for (const auto& p : props) {
    const bool square = p.width() == p.height();
    const bool is_window = square && std::find(cfg.window_sizes.begin(), cfg.window_sizes.end(),
                                               p.width()) != cfg.window_sizes.end();
    EXPECT_TRUE(is_window) << p.x0 << "," << p.y0 << "," << p.x1 << "," << p.y1;
  }
}

TEST(GenerateProposals, FindsABrightSquare) {
  const auto img = square_image(32, 9, 11, 19, 20);
  const auto props = generate_proposals(img);
  double best = 0.0;
  for (const auto& p : props) best = std::max(best, iou(p, box(9, 11, 19, 20)));
  EXPECT_GE(best, 0.7);
}

TEST(GenerateProposals, TooSmall) {
  EXPECT_EQ(code_of([] { generate_proposals(Tensor::zeros({3, 15, 32})); }),
            ErrorCode::kImageTooSmall);
}

TEST(GenerateProposals, ValidAndDeterministicOnRandomImages) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 100; ++t) {
    const std::size_t h = 16 + rng() % 24, w = 16 + rng() % 24;
    const Tensor img = Tensor::create({3, h, w}, oracle::random_vector(3 * h * w, rng, 0, 1));
    const auto a = generate_proposals(img);
    const auto b = generate_proposals(img);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_TRUE(a[i].same_box(b[i]));
      EXPECT_TRUE(a[i].valid());
      EXPECT_GE(a[i].x0, 0);
      EXPECT_GE(a[i].y0, 0);
      EXPECT_LE(a[i].x1, static_cast<int>(w));
      EXPECT_LE(a[i].y1, static_cast<int>(h));
    }
    // Deduplicated.
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i + 1; j < a.size(); ++j) EXPECT_LE(iou(a[i], a[j]), 0.95);
  }
}

TEST(EncodeBox, RoundTripAndHandValues) {
  const auto anchor = box(0, 0, 10, 10);
  const auto gt = box(2, 0, 12, 8);
  const auto t = encode_box(anchor, gt);
  EXPECT_DOUBLE_EQ(t.tx, (7.0 - 5.0) / 10.0);
  EXPECT_DOUBLE_EQ(t.ty, (4.0 - 5.0) / 10.0);
  EXPECT_DOUBLE_EQ(t.tw, 0.0);
  EXPECT_DOUBLE_EQ(t.th, std::log(0.8));
  EXPECT_TRUE(decode_box(anchor, t).same_box(gt));
}

TEST(LabelProposals, Examples) {
  const std::vector<GroundTruthBox> gt{{box(4, 4, 14, 14), 1}};
  const auto same = label_proposals({box(4, 4, 14, 14)}, gt);
  ASSERT_EQ(same.size(), 1u);
  EXPECT_EQ(same[0].cls, 1);
  EXPECT_EQ(same[0].regression_target.tx, 0.0);
  EXPECT_EQ(same[0].regression_target.ty, 0.0);
  EXPECT_EQ(same[0].regression_target.tw, 0.0);
  EXPECT_EQ(same[0].regression_target.th, 0.0);

  const auto far = label_proposals({box(20, 20, 25, 25)}, gt);
  ASSERT_EQ(far.size(), 1u);
  EXPECT_EQ(far[0].cls, 0);

  // IoU = 60/100 = 0.6 against a 10x10 box: shifted by 4 pixels along x
  // gives 6*10 / (100 + 100 - 60) = 0.4286, so use a 10x6 proposal inside.
  const auto p = box(4, 4, 14, 10);
  ASSERT_DOUBLE_EQ(iou(p, gt[0].box), 0.6);
  const auto mid = label_proposals({p}, gt, 0.5, 0.5);
  ASSERT_EQ(mid.size(), 1u);
  EXPECT_EQ(mid[0].cls, 1);
  EXPECT_DOUBLE_EQ(mid[0].regression_target.tx, 0.0);
  EXPECT_DOUBLE_EQ(mid[0].regression_target.ty, (9.0 - 7.0) / 6.0);
  EXPECT_DOUBLE_EQ(mid[0].regression_target.tw, 0.0);
  EXPECT_DOUBLE_EQ(mid[0].regression_target.th, std::log(10.0 / 6.0));

  // Band between bg_upper and fg_threshold is dropped.
  EXPECT_TRUE(label_proposals({p}, gt, 0.7, 0.3).empty());
}

TEST(LabelProposals, ForegroundNeverBelowThreshold) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 300; ++t) {
    std::vector<GroundTruthBox> gt;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 3); ++k)
      gt.push_back({random_box(rng, 32), 1 + static_cast<int>(rng() % 4)});
    std::vector<RegionProposal> props;
    for (int k = 0; k < 20; ++k) props.push_back(random_box(rng, 32));
    const double fg = 0.3 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
    for (const auto& lp : label_proposals(props, gt, fg, fg)) {
      double best = 0.0;
      for (const auto& g : gt) best = std::max(best, iou(lp.proposal, g.box));
      EXPECT_EQ(lp.cls > 0, best >= fg);
    }
  }
}

TEST(Nms, Examples) {
  const auto one = nms({box(0, 0, 4, 4, 0.3)}, 0.5);
  ASSERT_EQ(one.size(), 1u);
  const auto two = nms({box(0, 0, 4, 4, 0.8), box(0, 0, 4, 4, 0.9)}, 0.5);
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(*two[0].score, 0.9);
  EXPECT_EQ(code_of([] { nms({box(0, 0, 4, 4)}, 0.5); }), ErrorCode::kUnscoredProposal);
}

TEST(Nms, MatchesGreedyOracleAndKeepsProperties) {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 25;
    std::vector<RegionProposal> props;
    std::vector<oracle::Box> boxes;
    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores so ties happen.
      const double s = static_cast<double>(rng() % 8) / 8.0;
      props.push_back(random_box(rng, 20));
      props.back().score = s;
      boxes.push_back(ob(props.back()));
      scores.push_back(s);
    }
    const double thr = static_cast<double>(rng() % 10) / 10.0;
    const auto kept = nms(props, thr);
    const auto ref = oracle::nms(boxes, scores, thr);
    ASSERT_EQ(kept.size(), ref.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_TRUE(kept[i].same_box(props[ref[i]]));
      EXPECT_EQ(*kept[i].score, scores[ref[i]]);
      if (i > 0) {
        EXPECT_LE(*kept[i].score, *kept[i - 1].score);
      }
      for (std::size_t j = 0; j < i; ++j) EXPECT_LE(iou(kept[i], kept[j]), thr);
    }
  }
}

TEST(ProposalCsv, RoundTrip) {
  std::vector<RegionProposal> props{box(0, 1, 5, 9, 0.25), box(3, 3, 4, 4),
                                    box(2, 0, 30, 31, -1.0 / 3.0)};
  std::stringstream ss;
  write_proposals_csv(ss, props);
  EXPECT_EQ(ss.str().substr(0, 15), "x0,y0,x1,y1,sco");
  const auto back = read_proposals_csv(ss);
  ASSERT_EQ(back.size(), props.size());
  for (std::size_t i = 0; i < props.size(); ++i) {
    EXPECT_TRUE(back[i].same_box(props[i]));
    EXPECT_EQ(back[i].score, props[i].score);
  }
  std::stringstream bad("x0,y0,x1,y1,score\n3,3,3,5,\n");
  EXPECT_EQ(code_of([&] { read_proposals_csv(bad); }), ErrorCode::kEmptyBox);
}
