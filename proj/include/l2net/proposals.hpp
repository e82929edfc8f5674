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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l2net/tensor.hpp"

namespace l2net {

// Half-open pixel box [x0,x1) x [y0,y1).
struct RegionProposal {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::optional<double> score;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const {
    return static_cast<long long>(width()) * height();
  }
  bool valid() const { return x1 > x0 && y1 > y0; }
  bool same_box(const RegionProposal& o) const {
    return x0 == o.x0 && y0 == o.y0 && x1 == o.x1 && y1 == o.y1;
  }
};

double iou(const RegionProposal& a, const RegionProposal& b);

// Clip to [0,width) x [0,height); returns nullopt if nothing is left.
std::optional<RegionProposal> clip_box(const RegionProposal& box, int width,
                                       int height);

struct ProposalConfig {
  std::size_t max_proposals = 64;
  std::vector<double> thresholds{0.35, 0.5, 0.65, 0.8};
  std::size_t min_component_pixels = 4;
  bool per_channel = true;  // also segment each channel separately
  std::vector<int> window_sizes{8, 16, 32};
  double window_overlap = 0.5;  // fraction of the window size used as step
  double dedup_iou = 0.95;
  std::uint64_t seed = 7;
};

// Threshold components + greedy adjacent merge + multi-scale sliding
// windows, deduplicated. Components are scored by mean intensity and rank
// ahead of windows; windows fill the remaining budget.
std::vector<RegionProposal> generate_proposals(const Tensor& image,
                                               const ProposalConfig& cfg = {});

struct GroundTruthBox {
  RegionProposal box;
  int cls = 1;
};

struct BoxTarget {
  double tx = 0, ty = 0, tw = 0, th = 0;
};

struct LabeledProposal {
  RegionProposal proposal;
  int cls = 0;  // 0 = background
  BoxTarget regression_target;
  double max_iou = 0.0;
};

// Center/log-size parameterization relative to the anchor box.
BoxTarget encode_box(const RegionProposal& anchor, const RegionProposal& gt);
// Inverse of encode_box, rounded to integer pixels.
RegionProposal decode_box(const RegionProposal& anchor, const BoxTarget& t);

std::vector<LabeledProposal> label_proposals(
    const std::vector<RegionProposal>& proposals,
    const std::vector<GroundTruthBox>& ground_truth, double fg_threshold = 0.5,
    double bg_upper = 0.5);

// Greedy NMS by descending score, earlier index wins ties.
std::vector<RegionProposal> nms(const std::vector<RegionProposal>& proposals,
                                double iou_threshold);

// CSV with header x0,y0,x1,y1,score; empty score field means unscored.
void write_proposals_csv(std::ostream& out,
                         const std::vector<RegionProposal>& proposals);
std::vector<RegionProposal> read_proposals_csv(std::istream& in);

}  // namespace l2net
