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

#include <vector>

#include "l2net/proposals.hpp"
#include "l2net/tensor.hpp"

namespace l2net {

enum class PoolKind { kL2, kMax };

struct PyramidSpec {
  std::vector<std::size_t> levels{4, 2, 1};
  PoolKind pool = PoolKind::kL2;
  bool normalized = false;
  double epsilon = 1e-12;

  std::size_t cells() const;  // sum of level^2
  std::size_t output_length(std::size_t channels) const {
    return channels * cells();
  }
  void validate() const;
};

struct Extent {
  int width = 0, height = 0;
};

struct FeatureRegion {
  RegionProposal box;  // feature-map cells, half-open, clipped
  Tensor feature;      // [C,H,W]
};

// Scales an image-space box onto the feature grid: start rounds half-down,
// end rounds half-up, then the box is clipped and grown to at least 1 cell.
FeatureRegion map_proposal_to_feature(const RegionProposal& box,
                                      Extent image_size, const Tensor& feature);
RegionProposal map_box_to_grid(const RegionProposal& box, Extent image_size,
                               Extent feature_size);

// Integer bin edges floor(i*extent/g), each bin at least one cell wide.
struct Bin {
  int begin, end;
};
std::vector<Bin> pyramid_bins(int extent, std::size_t grid);

// [C * sum(level^2)], levels in spec order, channel-major within a level.
Tensor pyramid_pool(const FeatureRegion& region, const PyramidSpec& spec);

// All regions of one feature map as a single [R, C*cells] tensor. Regions are
// pooled concurrently when parallel kernels are enabled.
Tensor pyramid_pool_batch(const Tensor& feature,
                          const std::vector<RegionProposal>& feature_boxes,
                          const PyramidSpec& spec);

}  // namespace l2net
