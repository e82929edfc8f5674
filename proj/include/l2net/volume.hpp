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

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "l2net/proposals.hpp"
#include "l2net/tensor.hpp"

namespace l2net {

// Recognised modality names.
inline const std::vector<std::string>& modality_names() {
  static const std::vector<std::string> names{"T1",  "T1c", "T2", "FLAIR",
                                              "DWI", "PD",  "MRA"};
  return names;
}
bool is_modality(const std::string& name);

// Ground-truth lesion box on one axial slice (index along D), in (x, y)
// pixel coordinates of that slice.
struct LesionBox {
  std::uint32_t slice = 0;
  RegionProposal box;
  int cls = 1;
};

struct MultiModalVolume {
  std::string id;
  std::vector<std::pair<std::string, Tensor>> modalities;  // each [D,H,W]
  int label = 0;
  std::vector<LesionBox> lesion_boxes;

  bool has(const std::string& modality) const;
  const Tensor& get(const std::string& modality) const;
  std::size_t depth() const { return modalities.front().second.dim(0); }
  std::size_t height() const { return modalities.front().second.dim(1); }
  std::size_t width() const { return modalities.front().second.dim(2); }
  void validate() const;
};

// Min-max to [0,1] with float32 rounding; constant input maps to zeros.
// Idempotent, so a normalised volume survives save/load bit-exactly.
Tensor normalize_intensity(const Tensor& t);

// MVOL binary format (little-endian):
//   "MVOL1\0", u32 modality count,
//   per modality: char[16] name, u32 D, u32 H, u32 W, float32 voxels[D*H*W]
//   footer: u32 label, u32 box count, per box u32 slice,x0,y0,x1,y1,cls
void save_volume(const std::string& path, const MultiModalVolume& vol);
MultiModalVolume load_volume(const std::string& path);
std::vector<std::uint8_t> encode_volume(const MultiModalVolume& vol);
MultiModalVolume decode_volume(const std::vector<std::uint8_t>& bytes);

enum class View { kAxial, kCoronal, kSagittal };
std::string to_string(View view);
View view_from_string(const std::string& s);

struct FusedSlice {
  Tensor image;  // [M,H,W], channel k = modality k of the request
  View view = View::kAxial;
  int label = 0;
  std::string volume_id;
  std::size_t slice_index = 0;
  std::vector<GroundTruthBox> boxes;  // in this slice's pixel coordinates
};

// Missing modality -> fallback modality, e.g. FLAIR -> DWI.
using ModalityFallbacks = std::map<std::string, std::string>;

std::size_t view_extent(const MultiModalVolume& vol, View view);

FusedSlice fuse_modalities(const MultiModalVolume& vol,
                           const std::vector<std::string>& channels,
                           std::size_t slice_index, View view,
                           const ModalityFallbacks& fallbacks = {});

// Lesion boxes projected into one slice of the given view.
std::vector<GroundTruthBox> slice_boxes(const MultiModalVolume& vol, View view,
                                        std::size_t slice_index);

// One slice per index along the view axis. With lesion_only, slices without
// lesion boxes are dropped, unless the volume has no lesions at all.
std::vector<FusedSlice> extract_slices(const MultiModalVolume& vol, View view,
                                       bool lesion_only,
                                       const std::vector<std::string>& channels,
                                       const ModalityFallbacks& fallbacks = {});

struct AugmentOp {
  enum class Kind { kHFlip, kVFlip, kScale } kind;
  double factor = 1.0;
};

// Returns the original followed by one slice per op.
std::vector<FusedSlice> augment(const FusedSlice& slice,
                                const std::vector<AugmentOp>& ops);
FusedSlice hflip(const FusedSlice& slice);
FusedSlice vflip(const FusedSlice& slice);
// Bilinear resample about the centre, cropped/zero-padded to the same size.
FusedSlice rescale(const FusedSlice& slice, double factor);

struct SynthConfig {
  std::size_t classes = 5;
  std::size_t volumes_per_class = 12;
  std::size_t depth = 12, height = 32, width = 32;
  std::vector<std::string> modalities{"T1", "T1c", "T2", "FLAIR"};
  std::uint64_t seed = 2024;
  // Detection sets: every volume carries lesions, and each lesion is
  // conspicuous only in a random subset of the modalities.
  bool detection = false;
  std::size_t detection_volumes = 20;

  void validate() const;
};

std::vector<MultiModalVolume> generate_synthetic_dataset(const SynthConfig& cfg);

// Volume-level split, seeded. Fractions must sum to 1.
std::vector<std::vector<std::size_t>> split_indices(
    std::size_t n, const std::vector<double>& fractions, std::uint64_t seed);

// Stratified by label so every class appears in each part when possible.
std::vector<std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, const std::vector<double>& fractions,
    std::uint64_t seed);

}  // namespace l2net
