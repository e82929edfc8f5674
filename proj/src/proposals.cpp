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

#include "l2net/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "l2net/error.hpp"

namespace l2net {

double iou(const RegionProposal& a, const RegionProposal& b) {
  const int ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
  if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
  const double inter = static_cast<double>(ix1 - ix0) * (iy1 - iy0);
  const double uni = static_cast<double>(a.area()) + b.area() - inter;
  return inter / uni;
}

std::optional<RegionProposal> clip_box(const RegionProposal& box, int width,
                                       int height) {
  RegionProposal c = box;
  c.x0 = std::clamp(c.x0, 0, width);
  c.x1 = std::clamp(c.x1, 0, width);
  c.y0 = std::clamp(c.y0, 0, height);
  c.y1 = std::clamp(c.y1, 0, height);
  if (!c.valid()) return std::nullopt;
  return c;
}

namespace {

struct Component {
  RegionProposal box;
  double intensity_sum = 0.0;
  std::size_t pixels = 0;
};

std::vector<Component> threshold_components(const std::vector<double>& gray,
                                            int w, int h, double threshold,
                                            std::size_t min_pixels) {
  std::vector<int> label(gray.size(), -1);
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (label[start] >= 0 || gray[start] < threshold) continue;
    Component c;
    c.box = {start % w, start / w, start % w + 1, start / w + 1, std::nullopt};
    const int id = static_cast<int>(comps.size());
    label[start] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w, y = p / w;
      c.intensity_sum += gray[p];
      ++c.pixels;
      c.box.x0 = std::min(c.box.x0, x);
      c.box.y0 = std::min(c.box.y0, y);
      c.box.x1 = std::max(c.box.x1, x + 1);
      c.box.y1 = std::max(c.box.y1, y + 1);
      const int nbr[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (const auto& d : nbr) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int q = ny * w + nx;
        if (label[q] >= 0 || gray[q] < threshold) continue;
        label[q] = id;
        stack.push_back(q);
      }
    }
    comps.push_back(c);
  }
  std::erase_if(comps, [&](const Component& c) { return c.pixels < min_pixels; });
  return comps;
}

bool adjacent(const RegionProposal& a, const RegionProposal& b) {
  // Boxes touch or overlap after growing each by one pixel.
  return a.x0 - 1 <= b.x1 && b.x0 - 1 <= a.x1 && a.y0 - 1 <= b.y1 &&
         b.y0 - 1 <= a.y1;
}

RegionProposal box_union(const RegionProposal& a, const RegionProposal& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
          std::max(a.y1, b.y1), std::nullopt};
}

// Repeatedly merges the adjacent pair with the smallest union area, emitting
// every intermediate box.
std::vector<Component> greedy_merge(std::vector<Component> regions) {
  std::vector<Component> merged;
  while (regions.size() > 1) {
    std::size_t bi = 0, bj = 0;
    long long best = -1;
    for (std::size_t i = 0; i < regions.size(); ++i) {
      for (std::size_t j = i + 1; j < regions.size(); ++j) {
        if (!adjacent(regions[i].box, regions[j].box)) continue;
        const long long a = box_union(regions[i].box, regions[j].box).area();
        if (best < 0 || a < best) {
          best = a;
          bi = i;
          bj = j;
        }
      }
    }
    if (best < 0) break;
    Component m;
    m.box = box_union(regions[bi].box, regions[bj].box);
    m.intensity_sum = regions[bi].intensity_sum + regions[bj].intensity_sum;
    m.pixels = regions[bi].pixels + regions[bj].pixels;
    regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(bj));
    regions[bi] = m;
    merged.push_back(m);
  }
  return merged;
}

double window_mean(const std::vector<double>& gray, int w,
                   const RegionProposal& b) {
  double s = 0.0;
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x) s += gray[y * w + x];
  return s / static_cast<double>(b.area());
}

}  // namespace

std::vector<RegionProposal> generate_proposals(const Tensor& image,
                                               const ProposalConfig& cfg) {
  check(image.rank() == 3, ErrorCode::kShapeMismatch,
        "generate_proposals expects [C,H,W]");
  const int c = static_cast<int>(image.dim(0));
  const int h = static_cast<int>(image.dim(1));
  const int w = static_cast<int>(image.dim(2));
  check(h >= 16 && w >= 16, ErrorCode::kImageTooSmall,
        "image must be at least 16x16, got " + shape_to_string(image.shape()));

  std::vector<double> gray(static_cast<std::size_t>(w * h), 0.0);
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < w * h; ++i) gray[i] += image[ch * w * h + i] / c;

  // Segmentation planes: the channel mean, then (when enabled) every channel
  // on its own, so a blob conspicuous in one modality is not diluted.
  std::vector<std::vector<double>> planes{gray};
  if (cfg.per_channel && c > 1) {
    for (int ch = 0; ch < c; ++ch) {
      const auto first = image.data().begin() + ch * w * h;
      planes.emplace_back(first, first + w * h);
    }
  }

  std::vector<RegionProposal> out;
  auto try_add = [&](RegionProposal box) {
    if (out.size() >= cfg.max_proposals) return;
    auto clipped = clip_box(box, w, h);
    if (!clipped) return;
    for (const auto& kept : out) {
      if (iou(kept, *clipped) > cfg.dedup_iou) return;
    }
    out.push_back(*clipped);
  };

  std::vector<Component> candidates;
  for (const auto& plane : planes) {
    const double peak = *std::max_element(plane.begin(), plane.end());
    if (peak <= 0.0) continue;
    for (double t : cfg.thresholds) {
      auto comps = threshold_components(plane, w, h, t * peak, cfg.min_component_pixels);
      auto merged = greedy_merge(comps);
      candidates.insert(candidates.end(), comps.begin(), comps.end());
      candidates.insert(candidates.end(), merged.begin(), merged.end());
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Component& a, const Component& b) {
                     return a.intensity_sum / a.pixels > b.intensity_sum / b.pixels;
                   });
  for (auto& comp : candidates) {
    comp.box.score = comp.intensity_sum / static_cast<double>(comp.pixels);
    try_add(comp.box);
  }

  std::vector<RegionProposal> windows;
  for (int s : cfg.window_sizes) {
    if (s > w || s > h) continue;
    const int step = std::max(1, static_cast<int>(s * cfg.window_overlap));
    for (int y = 0; y + s <= h; y += step) {
      for (int x = 0; x + s <= w; x += step) {
        RegionProposal b{x, y, x + s, y + s, std::nullopt};
        b.score = window_mean(gray, w, b);
        windows.push_back(b);
      }
    }
  }
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(windows.begin(), windows.end(), rng);
  for (const auto& b : windows) try_add(b);
  return out;
}

BoxTarget encode_box(const RegionProposal& anchor, const RegionProposal& gt) {
  const double wa = anchor.width(), ha = anchor.height();
  const double xa = anchor.x0 + 0.5 * wa, ya = anchor.y0 + 0.5 * ha;
  const double w = gt.width(), h = gt.height();
  const double x = gt.x0 + 0.5 * w, y = gt.y0 + 0.5 * h;
  return {(x - xa) / wa, (y - ya) / ha, std::log(w / wa), std::log(h / ha)};
}

RegionProposal decode_box(const RegionProposal& anchor, const BoxTarget& t) {
  const double wa = anchor.width(), ha = anchor.height();
  const double cx = anchor.x0 + 0.5 * wa + t.tx * wa;
  const double cy = anchor.y0 + 0.5 * ha + t.ty * ha;
  const double w = wa * std::exp(std::clamp(t.tw, -4.0, 4.0));
  const double h = ha * std::exp(std::clamp(t.th, -4.0, 4.0));
  RegionProposal out;
  out.x0 = static_cast<int>(std::lround(cx - 0.5 * w));
  out.y0 = static_cast<int>(std::lround(cy - 0.5 * h));
  out.x1 = std::max(out.x0 + 1, static_cast<int>(std::lround(cx + 0.5 * w)));
  out.y1 = std::max(out.y0 + 1, static_cast<int>(std::lround(cy + 0.5 * h)));
  out.score = anchor.score;
  return out;
}

std::vector<LabeledProposal> label_proposals(
    const std::vector<RegionProposal>& proposals,
    const std::vector<GroundTruthBox>& ground_truth, double fg_threshold,
    double bg_upper) {
  check(bg_upper > 0.0 && bg_upper <= fg_threshold && fg_threshold <= 1.0,
        ErrorCode::kInvalidArgument, "need 0 < bg_upper <= fg_threshold <= 1");
  std::vector<LabeledProposal> out;
  for (const auto& p : proposals) {
    double best = 0.0;
    const GroundTruthBox* match = nullptr;
    for (const auto& gt : ground_truth) {
      const double v = iou(p, gt.box);
      if (match == nullptr || v > best) {
        best = v;
        match = &gt;
      }
    }
    LabeledProposal lp;
    lp.proposal = p;
    lp.max_iou = best;
    if (match != nullptr && best >= fg_threshold) {
      lp.cls = match->cls;
      lp.regression_target = encode_box(p, match->box);
    } else if (best < bg_upper) {
      lp.cls = 0;
    } else {
      continue;
    }
    out.push_back(lp);
  }
  return out;
}

std::vector<RegionProposal> nms(const std::vector<RegionProposal>& proposals,
                                double iou_threshold) {
  for (const auto& p : proposals) {
    check(p.score.has_value(), ErrorCode::kUnscoredProposal,
          "nms needs scored proposals");
  }
  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *proposals[a].score > *proposals[b].score;
  });
  std::vector<RegionProposal> kept;
  for (auto i : order) {
    bool keep = true;
    for (const auto& k : kept) {
      if (iou(k, proposals[i]) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(proposals[i]);
  }
  return kept;
}

void write_proposals_csv(std::ostream& out,
                         const std::vector<RegionProposal>& proposals) {
  out << "x0,y0,x1,y1,score\n";
  char buf[40];
  for (const auto& p : proposals) {
    out << p.x0 << ',' << p.y0 << ',' << p.x1 << ',' << p.y1 << ',';
    if (p.score) {
      std::snprintf(buf, sizeof(buf), "%.17g", *p.score);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<RegionProposal> read_proposals_csv(std::istream& in) {
  std::string line;
  check(static_cast<bool>(std::getline(in, line)) &&
            line == "x0,y0,x1,y1,score",
        ErrorCode::kBadConfig, "proposal CSV must start with x0,y0,x1,y1,score");
  std::vector<RegionProposal> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    check(fields.size() == 5, ErrorCode::kBadConfig, "bad proposal row: " + line);
    RegionProposal p;
    try {
      p.x0 = std::stoi(fields[0]);
      p.y0 = std::stoi(fields[1]);
      p.x1 = std::stoi(fields[2]);
      p.y1 = std::stoi(fields[3]);
      if (!fields[4].empty()) p.score = std::stod(fields[4]);
    } catch (const std::exception&) {
      fail(ErrorCode::kBadConfig, "bad proposal row: " + line);
    }
    check(p.valid(), ErrorCode::kEmptyBox, "empty box in row: " + line);
    out.push_back(p);
  }
  return out;
}

}  // namespace l2net
