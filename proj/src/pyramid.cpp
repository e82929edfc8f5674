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

#include "l2net/pyramid.hpp"

#include <algorithm>
#include <cmath>

#include "l2net/autograd.hpp"
#include "l2net/error.hpp"
#include "l2net/kernels.hpp"
#include "l2net/ops.hpp"

namespace l2net {

std::size_t PyramidSpec::cells() const {
  std::size_t n = 0;
  for (auto g : levels) n += g * g;
  return n;
}

void PyramidSpec::validate() const {
  check(!levels.empty(), ErrorCode::kInvalidArgument, "no pyramid levels");
  for (auto g : levels) {
    check(g >= 1, ErrorCode::kInvalidArgument, "pyramid level must be >= 1");
  }
  check(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be > 0");
}

namespace {

// Rounds num/den to the nearest integer; ties go down or up as requested.
int round_ratio(long long num, long long den, bool ties_up) {
  long long q = num / den;
  long long r = num % den;
  if (r < 0) {
    r += den;
    --q;
  }
  if (2 * r > den || (ties_up && 2 * r == den)) ++q;
  return static_cast<int>(q);
}

}  // namespace

RegionProposal map_box_to_grid(const RegionProposal& box, Extent image_size,
                               Extent feature_size) {
  check(image_size.width > 0 && image_size.height > 0 &&
            feature_size.width > 0 && feature_size.height > 0,
        ErrorCode::kInvalidArgument, "sizes must be positive");
  check(box.valid(), ErrorCode::kEmptyBox, "proposal has zero area");
  const long long fw = feature_size.width, fh = feature_size.height;
  RegionProposal m;
  m.x0 = round_ratio(box.x0 * fw, image_size.width, false);
  m.y0 = round_ratio(box.y0 * fh, image_size.height, false);
  m.x1 = round_ratio(box.x1 * fw, image_size.width, true);
  m.y1 = round_ratio(box.y1 * fh, image_size.height, true);
  m.x0 = std::clamp(m.x0, 0, feature_size.width - 1);
  m.y0 = std::clamp(m.y0, 0, feature_size.height - 1);
  m.x1 = std::clamp(m.x1, m.x0 + 1, feature_size.width);
  m.y1 = std::clamp(m.y1, m.y0 + 1, feature_size.height);
  m.score = box.score;
  return m;
}

FeatureRegion map_proposal_to_feature(const RegionProposal& box,
                                      Extent image_size,
                                      const Tensor& feature) {
  check(feature.rank() == 3, ErrorCode::kShapeMismatch,
        "feature map must be [C,H,W]");
  const Extent fs{static_cast<int>(feature.dim(2)),
                  static_cast<int>(feature.dim(1))};
  return {map_box_to_grid(box, image_size, fs), feature};
}

std::vector<Bin> pyramid_bins(int extent, std::size_t grid) {
  std::vector<Bin> bins(grid);
  const long long g = static_cast<long long>(grid);
  for (long long i = 0; i < g; ++i) {
    const int b = static_cast<int>(i * extent / g);
    const int e = static_cast<int>((i + 1) * extent / g);
    bins[i] = {b, std::max(e, b + 1)};
  }
  return bins;
}

namespace {

void check_region(const Tensor& feature, const RegionProposal& box) {
  check(feature.rank() == 3, ErrorCode::kShapeMismatch,
        "feature map must be [C,H,W]");
  check(box.valid() && box.x0 >= 0 && box.y0 >= 0 &&
            box.x1 <= static_cast<int>(feature.dim(2)) &&
            box.y1 <= static_cast<int>(feature.dim(1)),
        ErrorCode::kInvalidArgument, "region outside feature map");
}

// One region: writes C*cells values and, for max pooling, the source cell of
// each value.
void pool_region(const Tensor& feature, const RegionProposal& box,
                 const PyramidSpec& spec, double* out, std::size_t* argmax) {
  const std::size_t c = feature.dim(0);
  const std::size_t h = feature.dim(1), w = feature.dim(2);
  const double* x = feature.data().data();
  std::size_t o = 0;
  for (auto g : spec.levels) {
    const auto ybins = pyramid_bins(box.height(), g);
    const auto xbins = pyramid_bins(box.width(), g);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* plane = x + ch * h * w;
      for (const auto& by : ybins) {
        for (const auto& bx : xbins) {
          const int y0 = box.y0 + by.begin, y1 = box.y0 + by.end;
          const int x0 = box.x0 + bx.begin, x1 = box.x0 + bx.end;
          if (spec.pool == PoolKind::kL2) {
            double sum = 0.0;
            for (int yy = y0; yy < y1; ++yy)
              for (int xx = x0; xx < x1; ++xx) {
                const double v = plane[yy * w + xx];
                sum += v * v;
              }
            const double n = static_cast<double>((y1 - y0) * (x1 - x0));
            out[o] = spec.normalized ? std::sqrt(sum / n) : std::sqrt(sum);
          } else {
            std::size_t best = y0 * w + x0;
            for (int yy = y0; yy < y1; ++yy)
              for (int xx = x0; xx < x1; ++xx) {
                const std::size_t idx = yy * w + xx;
                if (plane[idx] > plane[best]) best = idx;
              }
            out[o] = plane[best];
            argmax[o] = ch * h * w + best;
          }
          ++o;
        }
      }
    }
  }
}

void unpool_region(const Tensor& feature, const RegionProposal& box,
                   const PyramidSpec& spec, const double* gout,
                   const std::size_t* argmax, std::span<double> gin) {
  const std::size_t c = feature.dim(0);
  const std::size_t h = feature.dim(1), w = feature.dim(2);
  const double* x = feature.data().data();
  std::size_t o = 0;
  for (auto g : spec.levels) {
    const auto ybins = pyramid_bins(box.height(), g);
    const auto xbins = pyramid_bins(box.width(), g);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = ch * h * w;
      for (const auto& by : ybins) {
        for (const auto& bx : xbins) {
          const int y0 = box.y0 + by.begin, y1 = box.y0 + by.end;
          const int x0 = box.x0 + bx.begin, x1 = box.x0 + bx.end;
          if (spec.pool == PoolKind::kL2) {
            double sum = 0.0;
            for (int yy = y0; yy < y1; ++yy)
              for (int xx = x0; xx < x1; ++xx) {
                const double v = x[off + yy * w + xx];
                sum += v * v;
              }
            const double n = static_cast<double>((y1 - y0) * (x1 - x0));
            const double scale = spec.normalized ? std::sqrt(n) : 1.0;
            const double k =
                gout[o] / (scale * std::max(std::sqrt(sum), spec.epsilon));
            for (int yy = y0; yy < y1; ++yy)
              for (int xx = x0; xx < x1; ++xx) {
                gin[off + yy * w + xx] += x[off + yy * w + xx] * k;
              }
          } else {
            gin[argmax[o]] += gout[o];
          }
          ++o;
        }
      }
    }
  }
}

}  // namespace

Tensor pyramid_pool(const FeatureRegion& region, const PyramidSpec& spec) {
  const std::size_t len = spec.output_length(region.feature.dim(0));
  return reshape(pyramid_pool_batch(region.feature, {region.box}, spec), {len});
}

Tensor pyramid_pool_batch(const Tensor& feature,
                          const std::vector<RegionProposal>& feature_boxes,
                          const PyramidSpec& spec) {
  spec.validate();
  check(!feature_boxes.empty(), ErrorCode::kInvalidArgument, "no regions");
  for (const auto& b : feature_boxes) check_region(feature, b);
  const std::size_t len = spec.output_length(feature.dim(0));
  const std::size_t r = feature_boxes.size();
  std::vector<double> out(r * len);
  auto argmax = std::make_shared<std::vector<std::size_t>>(
      spec.pool == PoolKind::kMax ? r * len : 0);
  const bool par = kernels::parallel_enabled();
  const auto nr = static_cast<std::ptrdiff_t>(r);
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::ptrdiff_t i = 0; i < nr; ++i) {
    pool_region(feature, feature_boxes[i], spec, out.data() + i * len,
                argmax->empty() ? nullptr : argmax->data() + i * len);
  }
  return record_op(
      {&feature}, {r, len}, std::move(out),
      [feature, feature_boxes, spec, argmax, len](
          std::span<const double> gout, std::span<const std::span<double>> gin) {
        // Regions may share cells, so accumulate in region order.
        for (std::size_t i = 0; i < feature_boxes.size(); ++i) {
          unpool_region(feature, feature_boxes[i], spec, gout.data() + i * len,
                        argmax->empty() ? nullptr : argmax->data() + i * len,
                        gin[0]);
        }
      });
}

}  // namespace l2net
