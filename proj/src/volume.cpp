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

#include "l2net/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "l2net/error.hpp"

namespace l2net {

bool is_modality(const std::string& name) {
  const auto& n = modality_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

bool MultiModalVolume::has(const std::string& modality) const {
  return std::any_of(modalities.begin(), modalities.end(),
                     [&](const auto& m) { return m.first == modality; });
}

const Tensor& MultiModalVolume::get(const std::string& modality) const {
  for (const auto& m : modalities) {
    if (m.first == modality) return m.second;
  }
  fail(ErrorCode::kMissingModality,
       "volume '" + id + "' has no " + modality + " modality");
}

void MultiModalVolume::validate() const {
  check(!modalities.empty(), ErrorCode::kInconsistentDims, "no modalities");
  const Shape& ref = modalities.front().second.shape();
  check(ref.size() == 3, ErrorCode::kInconsistentDims, "modality must be [D,H,W]");
  for (const auto& [name, t] : modalities) {
    check(is_modality(name), ErrorCode::kMissingModality,
          "unknown modality '" + name + "'");
    check(t.shape() == ref, ErrorCode::kInconsistentDims,
          name + " is " + shape_to_string(t.shape()) + ", expected " +
              shape_to_string(ref));
  }
  for (const auto& b : lesion_boxes) {
    check(b.slice < ref[0] && b.box.valid() && b.box.x0 >= 0 && b.box.y0 >= 0 &&
              b.box.x1 <= static_cast<int>(ref[2]) &&
              b.box.y1 <= static_cast<int>(ref[1]),
          ErrorCode::kInconsistentDims, "lesion box outside the volume");
  }
}

Tensor normalize_intensity(const Tensor& t) {
  const auto [lo_it, hi_it] = std::minmax_element(t.data().begin(), t.data().end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(t.numel(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<float>((t[i] - lo) / (hi - lo));
    }
  }
  return Tensor::create(t.shape(), std::move(out));
}

namespace {

constexpr char kMagic[6] = {'M', 'V', 'O', 'L', '1', '\0'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    check(pos_ + n <= bytes_.size(), ErrorCode::kTruncatedFile,
          "MVOL ends at byte " + std::to_string(bytes_.size()) + ", needed " +
              std::to_string(pos_ + n));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string fixed_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    s.resize(std::strlen(s.c_str()));
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_volume(const MultiModalVolume& vol) {
  vol.validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(vol.modalities.size()));
  for (const auto& [name, t] : vol.modalities) {
    char buf[16] = {};
    check(name.size() < sizeof(buf), ErrorCode::kInvalidArgument,
          "modality name too long");
    std::memcpy(buf, name.data(), name.size());
    out.insert(out.end(), buf, buf + sizeof(buf));
    for (std::size_t i = 0; i < 3; ++i) put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
    for (double v : t.data()) put_f32(out, static_cast<float>(v));
  }
  put_u32(out, static_cast<std::uint32_t>(vol.label));
  put_u32(out, static_cast<std::uint32_t>(vol.lesion_boxes.size()));
  for (const auto& b : vol.lesion_boxes) {
    put_u32(out, b.slice);
    put_u32(out, static_cast<std::uint32_t>(b.box.x0));
    put_u32(out, static_cast<std::uint32_t>(b.box.y0));
    put_u32(out, static_cast<std::uint32_t>(b.box.x1));
    put_u32(out, static_cast<std::uint32_t>(b.box.y1));
    put_u32(out, static_cast<std::uint32_t>(b.cls));
  }
  return out;
}

MultiModalVolume decode_volume(const std::vector<std::uint8_t>& bytes) {
  check(bytes.size() >= sizeof(kMagic) &&
            std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0,
        ErrorCode::kBadMagic, "not an MVOL1 file");
  Reader r(bytes);
  r.fixed_string(sizeof(kMagic));
  MultiModalVolume vol;
  const std::uint32_t count = r.u32();
  check(count >= 1, ErrorCode::kInconsistentDims, "MVOL has no modalities");
  for (std::uint32_t m = 0; m < count; ++m) {
    std::string name = r.fixed_string(16);
    const std::size_t d = r.u32(), h = r.u32(), w = r.u32();
    check(d > 0 && h > 0 && w > 0, ErrorCode::kInconsistentDims,
          name + " has an empty extent");
    if (!vol.modalities.empty()) {
      check(Shape({d, h, w}) == vol.modalities.front().second.shape(),
            ErrorCode::kInconsistentDims,
            name + " is " + shape_to_string({d, h, w}) + ", expected " +
                shape_to_string(vol.modalities.front().second.shape()));
    }
    r.need(d * h * w * 4);
    std::vector<double> voxels(d * h * w);
    for (double& v : voxels) v = r.f32();
    vol.modalities.emplace_back(
        name, normalize_intensity(Tensor::create({d, h, w}, std::move(voxels))));
  }
  vol.label = static_cast<int>(r.u32());
  const std::uint32_t boxes = r.u32();
  for (std::uint32_t i = 0; i < boxes; ++i) {
    LesionBox b;
    b.slice = r.u32();
    b.box.x0 = static_cast<int>(r.u32());
    b.box.y0 = static_cast<int>(r.u32());
    b.box.x1 = static_cast<int>(r.u32());
    b.box.y1 = static_cast<int>(r.u32());
    b.cls = static_cast<int>(r.u32());
    vol.lesion_boxes.push_back(b);
  }
  vol.validate();
  return vol;
}

void save_volume(const std::string& path, const MultiModalVolume& vol) {
  const auto bytes = encode_volume(vol);
  std::ofstream out(path, std::ios::binary);
  check(static_cast<bool>(out), ErrorCode::kIoFailure, "cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  check(static_cast<bool>(out), ErrorCode::kIoFailure, "write failed: " + path);
}

MultiModalVolume load_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kIoFailure, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  auto vol = decode_volume(bytes);
  auto slash = path.find_last_of('/');
  vol.id = path.substr(slash == std::string::npos ? 0 : slash + 1);
  if (vol.id.size() > 5 && vol.id.ends_with(".mvol")) vol.id.resize(vol.id.size() - 5);
  return vol;
}

std::string to_string(View view) {
  switch (view) {
    case View::kAxial: return "axial";
    case View::kCoronal: return "coronal";
    case View::kSagittal: return "sagittal";
  }
  return "?";
}

View view_from_string(const std::string& s) {
  if (s == "axial") return View::kAxial;
  if (s == "coronal") return View::kCoronal;
  if (s == "sagittal") return View::kSagittal;
  fail(ErrorCode::kBadConfig, "unknown view '" + s + "'");
}

std::size_t view_extent(const MultiModalVolume& vol, View view) {
  switch (view) {
    case View::kAxial: return vol.depth();
    case View::kCoronal: return vol.height();
    case View::kSagittal: return vol.width();
  }
  return 0;
}

namespace {

// Plane of one modality: axial [H,W], coronal [D,W], sagittal [D,H].
void copy_plane(const Tensor& t, View view, std::size_t index,
                std::vector<double>& out) {
  const std::size_t d = t.dim(0), h = t.dim(1), w = t.dim(2);
  switch (view) {
    case View::kAxial:
      for (std::size_t i = 0; i < h * w; ++i) out.push_back(t[index * h * w + i]);
      break;
    case View::kCoronal:
      for (std::size_t z = 0; z < d; ++z)
        for (std::size_t x = 0; x < w; ++x) out.push_back(t[(z * h + index) * w + x]);
      break;
    case View::kSagittal:
      for (std::size_t z = 0; z < d; ++z)
        for (std::size_t y = 0; y < h; ++y) out.push_back(t[(z * h + y) * w + index]);
      break;
  }
}

}  // namespace

std::vector<GroundTruthBox> slice_boxes(const MultiModalVolume& vol, View view,
                                        std::size_t slice_index) {
  std::vector<GroundTruthBox> out;
  if (view == View::kAxial) {
    for (const auto& b : vol.lesion_boxes) {
      if (b.slice == slice_index) out.push_back({b.box, b.cls});
    }
    return out;
  }
  // Rows (z, [lo,hi)) of every axial box crossing this plane, grouped into
  // connected runs over adjacent z with overlapping spans.
  struct Row {
    int z, lo, hi, cls;
  };
  std::vector<Row> rows;
  const int s = static_cast<int>(slice_index);
  for (const auto& b : vol.lesion_boxes) {
    if (view == View::kCoronal && b.box.y0 <= s && s < b.box.y1) {
      rows.push_back({static_cast<int>(b.slice), b.box.x0, b.box.x1, b.cls});
    } else if (view == View::kSagittal && b.box.x0 <= s && s < b.box.x1) {
      rows.push_back({static_cast<int>(b.slice), b.box.y0, b.box.y1, b.cls});
    }
  }
  std::vector<std::size_t> parent(rows.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      if (std::abs(rows[i].z - rows[j].z) <= 1 && rows[i].cls == rows[j].cls &&
          rows[i].lo < rows[j].hi && rows[j].lo < rows[i].hi) {
        parent[find(i)] = find(j);
      }
    }
  std::map<std::size_t, GroundTruthBox> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto root = find(i);
    auto it = groups.find(root);
    if (it == groups.end()) {
      groups[root] = {{rows[i].lo, rows[i].z, rows[i].hi, rows[i].z + 1, std::nullopt},
                      rows[i].cls};
    } else {
      auto& box = it->second.box;
      box.x0 = std::min(box.x0, rows[i].lo);
      box.x1 = std::max(box.x1, rows[i].hi);
      box.y0 = std::min(box.y0, rows[i].z);
      box.y1 = std::max(box.y1, rows[i].z + 1);
    }
  }
  for (auto& [root, gt] : groups) out.push_back(gt);
  return out;
}

FusedSlice fuse_modalities(const MultiModalVolume& vol,
                           const std::vector<std::string>& channels,
                           std::size_t slice_index, View view,
                           const ModalityFallbacks& fallbacks) {
  check(!channels.empty(), ErrorCode::kInvalidArgument, "no channels requested");
  check(slice_index < view_extent(vol, view), ErrorCode::kInvalidArgument,
        "slice index out of range");
  std::vector<double> data;
  for (const auto& name : channels) {
    std::string source = name;
    if (!vol.has(source)) {
      auto fb = fallbacks.find(name);
      check(fb != fallbacks.end() && vol.has(fb->second),
            ErrorCode::kMissingModality,
            "volume '" + vol.id + "' lacks " + name + " and no fallback applies");
      source = fb->second;
    }
    copy_plane(vol.get(source), view, slice_index, data);
  }
  std::size_t rows = 0, cols = 0;
  switch (view) {
    case View::kAxial: rows = vol.height(); cols = vol.width(); break;
    case View::kCoronal: rows = vol.depth(); cols = vol.width(); break;
    case View::kSagittal: rows = vol.depth(); cols = vol.height(); break;
  }
  FusedSlice s;
  s.image = Tensor::create({channels.size(), rows, cols}, std::move(data));
  s.view = view;
  s.label = vol.label;
  s.volume_id = vol.id;
  s.slice_index = slice_index;
  s.boxes = slice_boxes(vol, view, slice_index);
  return s;
}

std::vector<FusedSlice> extract_slices(const MultiModalVolume& vol, View view,
                                       bool lesion_only,
                                       const std::vector<std::string>& channels,
                                       const ModalityFallbacks& fallbacks) {
  std::vector<FusedSlice> out;
  const bool filter = lesion_only && !vol.lesion_boxes.empty();
  for (std::size_t i = 0; i < view_extent(vol, view); ++i) {
    if (filter && slice_boxes(vol, view, i).empty()) continue;
    out.push_back(fuse_modalities(vol, channels, i, view, fallbacks));
  }
  return out;
}

FusedSlice hflip(const FusedSlice& slice) {
  const std::size_t c = slice.image.dim(0), h = slice.image.dim(1),
                    w = slice.image.dim(2);
  std::vector<double> out(slice.image.numel());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out[(ch * h + y) * w + x] = slice.image[(ch * h + y) * w + (w - 1 - x)];
  FusedSlice r = slice;
  r.image = Tensor::create(slice.image.shape(), std::move(out));
  const int wi = static_cast<int>(w);
  for (auto& b : r.boxes) {
    const int x0 = b.box.x0;
    b.box.x0 = wi - b.box.x1;
    b.box.x1 = wi - x0;
  }
  return r;
}

FusedSlice vflip(const FusedSlice& slice) {
  const std::size_t c = slice.image.dim(0), h = slice.image.dim(1),
                    w = slice.image.dim(2);
  std::vector<double> out(slice.image.numel());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out[(ch * h + y) * w + x] = slice.image[(ch * h + (h - 1 - y)) * w + x];
  FusedSlice r = slice;
  r.image = Tensor::create(slice.image.shape(), std::move(out));
  const int hi = static_cast<int>(h);
  for (auto& b : r.boxes) {
    const int y0 = b.box.y0;
    b.box.y0 = hi - b.box.y1;
    b.box.y1 = hi - y0;
  }
  return r;
}

FusedSlice rescale(const FusedSlice& slice, double factor) {
  check(factor > 0.0, ErrorCode::kInvalidArgument, "scale must be positive");
  const std::size_t c = slice.image.dim(0), h = slice.image.dim(1),
                    w = slice.image.dim(2);
  const double cy = 0.5 * static_cast<double>(h);
  const double cx = 0.5 * static_cast<double>(w);
  auto sample = [&](std::size_t ch, double y, double x) {
    const double fy = std::floor(y), fx = std::floor(x);
    const double ty = y - fy, tx = x - fx;
    const auto at = [&](double yy, double xx) {
      if (yy < 0 || xx < 0 || yy >= static_cast<double>(h) || xx >= static_cast<double>(w)) {
        return 0.0;
      }
      return slice.image[(ch * h + static_cast<std::size_t>(yy)) * w +
                         static_cast<std::size_t>(xx)];
    };
    if (ty == 0.0 && tx == 0.0) return at(fy, fx);
    return (1 - ty) * ((1 - tx) * at(fy, fx) + tx * at(fy, fx + 1)) +
           ty * ((1 - tx) * at(fy + 1, fx) + tx * at(fy + 1, fx + 1));
  };
  std::vector<double> out(slice.image.numel());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double sy = (static_cast<double>(y) + 0.5 - cy) / factor + cy - 0.5;
        const double sx = (static_cast<double>(x) + 0.5 - cx) / factor + cx - 0.5;
        out[(ch * h + y) * w + x] = std::clamp(sample(ch, sy, sx), 0.0, 1.0);
      }
  FusedSlice r = slice;
  r.image = Tensor::create(slice.image.shape(), std::move(out));
  std::vector<GroundTruthBox> boxes;
  for (const auto& b : slice.boxes) {
    RegionProposal s;
    s.x0 = static_cast<int>(std::lround((b.box.x0 - cx) * factor + cx));
    s.x1 = static_cast<int>(std::lround((b.box.x1 - cx) * factor + cx));
    s.y0 = static_cast<int>(std::lround((b.box.y0 - cy) * factor + cy));
    s.y1 = static_cast<int>(std::lround((b.box.y1 - cy) * factor + cy));
    if (auto clipped = clip_box(s, static_cast<int>(w), static_cast<int>(h))) {
      boxes.push_back({*clipped, b.cls});
    }
  }
  r.boxes = std::move(boxes);
  return r;
}

std::vector<FusedSlice> augment(const FusedSlice& slice,
                                const std::vector<AugmentOp>& ops) {
  std::vector<FusedSlice> out{slice};
  for (const auto& op : ops) {
    switch (op.kind) {
      case AugmentOp::Kind::kHFlip: out.push_back(hflip(slice)); break;
      case AugmentOp::Kind::kVFlip: out.push_back(vflip(slice)); break;
      case AugmentOp::Kind::kScale: out.push_back(rescale(slice, op.factor)); break;
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> split_indices(
    std::size_t n, const std::vector<double>& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    check(f >= 0.0, ErrorCode::kBadConfig, "negative split fraction");
    total += f;
  }
  check(std::abs(total - 1.0) < 1e-9, ErrorCode::kBadConfig,
        "split fractions must sum to 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> parts(fractions.size());
  double acc = 0.0;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    acc += fractions[p];
    const std::size_t end =
        p + 1 == fractions.size() ? n : static_cast<std::size_t>(std::lround(acc * n));
    for (std::size_t i = begin; i < std::max(begin, end); ++i) parts[p].push_back(order[i]);
    begin = std::max(begin, end);
  }
  for (auto& part : parts) std::sort(part.begin(), part.end());
  return parts;
}

std::vector<std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, const std::vector<double>& fractions,
    std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> parts(fractions.size());
  for (const auto& [label, members] : by_label) {
    const auto sub = split_indices(members.size(), fractions,
                                   seed + static_cast<std::uint64_t>(label) * 7919);
    for (std::size_t p = 0; p < sub.size(); ++p)
      for (auto i : sub[p]) parts[p].push_back(members[i]);
  }
  for (auto& part : parts) std::sort(part.begin(), part.end());
  return parts;
}

}  // namespace l2net
