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

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "l2net/error.hpp"
#include "l2net/volume.hpp"

namespace l2net {

void SynthConfig::validate() const {
  check(classes == 5, ErrorCode::kBadConfig, "the synthetic set has 5 classes");
  if (detection) {
    check(detection_volumes > 0, ErrorCode::kBadConfig,
          "detection_volumes must be > 0");
  } else {
    check(volumes_per_class > 0, ErrorCode::kBadConfig,
          "volumes_per_class must be > 0");
  }
  check(depth >= 4 && height >= 16 && width >= 16, ErrorCode::kBadConfig,
        "volume must be at least 4x16x16");
  check(!modalities.empty(), ErrorCode::kBadConfig, "no modalities");
  for (const auto& m : modalities) {
    check(is_modality(m), ErrorCode::kBadConfig, "unknown modality '" + m + "'");
  }
}

namespace {

enum Tissue { kOutside, kScalp, kBrain, kCsf, kCore, kRing, kEdema, kLgg, kMs, kTissueCount };

// Rows: tissue. Columns: T1, T1c, T2, FLAIR, DWI, PD, MRA.
constexpr std::array<std::array<double, 7>, kTissueCount> kIntensity{{
    {0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00},  // outside
    {1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00},  // scalp
    {0.55, 0.55, 0.45, 0.45, 0.40, 0.50, 0.30},  // brain
    {0.15, 0.15, 0.90, 0.12, 0.10, 0.70, 0.10},  // csf
    {0.25, 0.25, 0.80, 0.70, 0.30, 0.72, 0.20},  // necrotic core
    {0.40, 0.95, 0.70, 0.85, 0.70, 0.65, 0.55},  // enhancing ring
    {0.45, 0.45, 0.75, 0.80, 0.50, 0.66, 0.30},  // edema
    {0.38, 0.50, 0.78, 0.82, 0.45, 0.70, 0.28},  // low-grade mass
    {0.35, 0.55, 0.85, 0.90, 0.55, 0.75, 0.30},  // demyelinating plaque
}};

std::size_t modality_column(const std::string& name) {
  const auto& names = modality_names();
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) -
                                  names.begin());
}

enum class LesionType { kHgg, kLgg, kMs };

struct Blob {
  LesionType type;
  double cz, cy, cx, rz, ry, rx;
  std::array<bool, 7> visible{true, true, true, true, true, true, true};
  bool enhancing = false;
};

double ellipsoid(double z, double y, double x, double cz, double cy, double cx,
                 double rz, double ry, double rx) {
  const double dz = (z - cz) / rz, dy = (y - cy) / ry, dx = (x - cx) / rx;
  return std::sqrt(dz * dz + dy * dy + dx * dx);
}

class Generator {
 public:
  Generator(const SynthConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

  MultiModalVolume make(int label, LesionType detect_type, std::size_t index) {
    const double d = cfg_.depth, h = cfg_.height, w = cfg_.width;
    const double s = w / 32.0;
    const double zs = d / 12.0;
    const double brain_scale = uniform(0.88, 1.04) * (label == 3 ? 0.93 : 1.0);
    brz_ = 0.44 * d * brain_scale;
    bry_ = 0.42 * h * brain_scale;
    brx_ = 0.36 * w * brain_scale;
    bcz_ = 0.5 * d - 0.5 + uniform(-0.5, 0.5);
    bcy_ = 0.5 * h - 0.5 + uniform(-1.0, 1.0) * s;
    bcx_ = 0.5 * w - 0.5 + uniform(-1.0, 1.0) * s;
    const double vent = label == 3 ? uniform(1.6, 1.9) : uniform(0.9, 1.1);
    vrz_ = 0.20 * d * std::min(vent, 1.4);
    vry_ = 0.13 * h * vent;
    vrx_ = 0.05 * w * vent;
    voff_ = 0.08 * w * (label == 3 ? 1.25 : 1.0);

    blobs_.clear();
    const bool detection = cfg_.detection;
    LesionType type = detect_type;
    bool has_blobs = detection;
    if (!detection) {
      has_blobs = label == 1 || label == 2 || label == 4;
      type = label == 1 ? LesionType::kHgg
             : label == 2 ? LesionType::kLgg
                          : LesionType::kMs;
    }
    if (has_blobs) {
      const std::size_t count =
          type == LesionType::kMs ? 3 + rng_() % 4 : 1;
      for (std::size_t i = 0; i < count; ++i) blobs_.push_back(place(type, s, zs));
      if (detection) {
        for (auto& b : blobs_) randomize_visibility(b);
      }
    }

    // Smooth texture shared by all modalities.
    std::array<double, 6> phase;
    for (double& p : phase) p = uniform(0.0, 6.283185307179586);
    const double fx = uniform(0.25, 0.45) / s, fy = uniform(0.25, 0.45) / s;

    const std::size_t D = cfg_.depth, H = cfg_.height, W = cfg_.width;
    std::vector<int> tissue(D * H * W);
    std::vector<int> owner(D * H * W, -1);
    std::vector<double> texture(D * H * W);
    for (std::size_t z = 0; z < D; ++z)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const std::size_t i = (z * H + y) * W + x;
          int who = -1;
          tissue[i] = classify(z, y, x, who);
          owner[i] = who;
          texture[i] = 0.035 * std::sin(fx * x + phase[0]) * std::sin(fy * y + phase[1]) +
                       0.025 * std::sin(0.7 * z + phase[2] + 0.3 * x);
        }

    MultiModalVolume vol;
    vol.id = std::string(detection ? "det" : "cls") + "_" +
             std::to_string(label) + "_" + std::to_string(index);
    vol.label = label;
    std::normal_distribution<double> noise(0.0, 0.03);
    for (const auto& name : cfg_.modalities) {
      const std::size_t col = modality_column(name);
      // Scanner-like contrast drift, wide enough that per-channel means alone
      // do not separate the classes.
      const double gain = uniform(0.75, 1.25);
      const double offset = uniform(-0.08, 0.08);
      std::vector<double> data(D * H * W);
      for (std::size_t i = 0; i < data.size(); ++i) {
        int t = tissue[i];
        if (owner[i] >= 0 && !blobs_[owner[i]].visible[col]) t = kBrain;
        double v = kIntensity[t][col];
        if (t == kMs && blobs_[owner[i]].enhancing && col == 1) v = 0.85;
        if (t != kOutside && t != kScalp) v = v * gain + offset + texture[i] + noise(rng_);
        data[i] = v;
      }
      vol.modalities.emplace_back(name, normalize_intensity(Tensor::create({D, H, W}, std::move(data))));
    }

    // Per-slice tight boxes of every lesion's own voxels (edema excluded).
    std::vector<int> box_owner = owner;
    if (label == 3 && !detection) {
      for (std::size_t i = 0; i < tissue.size(); ++i) box_owner[i] = tissue[i] == kCsf ? 0 : -1;
    } else {
      for (std::size_t i = 0; i < tissue.size(); ++i) {
        if (tissue[i] == kEdema) box_owner[i] = -1;
      }
    }
    const int owners = label == 3 && !detection ? 1 : static_cast<int>(blobs_.size());
    // Tiny volumes can shrink every lesion below the usual 4-pixel floor;
    // a lesion class must still carry boxes, so retry with any pixel.
    for (int min_pixels : {4, 1}) {
      for (std::size_t z = 0; z < D; ++z) {
        for (int b = 0; b < owners; ++b) {
          RegionProposal box{static_cast<int>(W), static_cast<int>(H), 0, 0, std::nullopt};
          int pixels = 0;
          for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
              if (box_owner[(z * H + y) * W + x] != b) continue;
              ++pixels;
              box.x0 = std::min(box.x0, static_cast<int>(x));
              box.y0 = std::min(box.y0, static_cast<int>(y));
              box.x1 = std::max(box.x1, static_cast<int>(x) + 1);
              box.y1 = std::max(box.y1, static_cast<int>(y) + 1);
            }
          if (pixels >= min_pixels) {
            vol.lesion_boxes.push_back({static_cast<std::uint32_t>(z), box,
                                        detection ? 1 : label});
          }
        }
      }
      if (!vol.lesion_boxes.empty() || owners == 0) break;
    }
    vol.validate();
    return vol;
  }

 private:
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  Blob place(LesionType type, double s, double zs) {
    Blob b;
    b.type = type;
    double rxy = 0, rz = 0, reach = 0;
    switch (type) {
      case LesionType::kHgg: rxy = uniform(4.5, 6.0) * s; rz = uniform(2.2, 3.0) * zs; reach = 0.35; break;
      case LesionType::kLgg: rxy = uniform(3.2, 4.4) * s; rz = uniform(1.8, 2.6) * zs; reach = 0.45; break;
      case LesionType::kMs: rxy = uniform(1.4, 2.2) * s; rz = uniform(1.0, 1.5) * zs; reach = 0.6; break;
    }
    b.rx = rxy * uniform(0.85, 1.15);
    b.ry = rxy * uniform(0.85, 1.15);
    b.rz = rz;
    for (int attempt = 0; attempt < 100; ++attempt) {
      b.cz = bcz_ + uniform(-reach, reach) * brz_ * 0.6;
      b.cy = bcy_ + uniform(-reach, reach) * bry_;
      b.cx = bcx_ + uniform(-reach, reach) * brx_;
      bool clash = false;
      for (const auto& o : blobs_) {
        if (std::abs(o.cy - b.cy) < o.ry + b.ry + 1 && std::abs(o.cx - b.cx) < o.rx + b.rx + 1 &&
            std::abs(o.cz - b.cz) < o.rz + b.rz + 1) {
          clash = true;
        }
      }
      if (!clash) break;
    }
    b.enhancing = type == LesionType::kMs && uniform(0.0, 1.0) < 0.3;
    return b;
  }

  void randomize_visibility(Blob& b) {
    // Each lesion stands out in about half of the modalities; at least one.
    const auto& mods = cfg_.modalities;
    bool any = false;
    for (std::size_t m = 0; m < 7; ++m) b.visible[m] = false;
    for (const auto& name : mods) {
      const bool v = uniform(0.0, 1.0) < 0.5;
      b.visible[modality_column(name)] = v;
      any = any || v;
    }
    if (!any) b.visible[modality_column(mods[rng_() % mods.size()])] = true;
  }

  int classify(double z, double y, double x, int& who) const {
    const double r = ellipsoid(z, y, x, bcz_, bcy_, bcx_, brz_, bry_, brx_);
    if (r > 1.0 + 1.6 / brx_) return kOutside;
    if (r > 1.0) return kScalp;
    for (std::size_t i = 0; i < blobs_.size(); ++i) {
      const auto& b = blobs_[i];
      const double q = ellipsoid(z, y, x, b.cz, b.cy, b.cx, b.rz, b.ry, b.rx);
      switch (b.type) {
        case LesionType::kHgg:
          if (q <= 1.0) {
            who = static_cast<int>(i);
            const double ring = 1.0 - 1.3 / std::min(b.rx, b.ry);
            return q >= ring ? kRing : kCore;
          }
          if (q <= 1.45) {
            who = static_cast<int>(i);
            return kEdema;
          }
          break;
        case LesionType::kLgg:
          if (q <= 1.0) {
            who = static_cast<int>(i);
            return kLgg;
          }
          break;
        case LesionType::kMs:
          if (q <= 1.0) {
            who = static_cast<int>(i);
            return kMs;
          }
          break;
      }
    }
    for (double side : {-1.0, 1.0}) {
      if (ellipsoid(z, y, x, bcz_, bcy_ - 0.05 * cfg_.height, bcx_ + side * voff_,
                    vrz_, vry_, vrx_) <= 1.0) {
        return kCsf;
      }
    }
    return kBrain;
  }

  const SynthConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<Blob> blobs_;
  double brz_ = 0, bry_ = 0, brx_ = 0, bcz_ = 0, bcy_ = 0, bcx_ = 0;
  double vrz_ = 0, vry_ = 0, vrx_ = 0, voff_ = 0;
};

}  // namespace

std::vector<MultiModalVolume> generate_synthetic_dataset(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<MultiModalVolume> out;
  Generator gen(cfg, cfg.seed);
  if (cfg.detection) {
    const LesionType types[3] = {LesionType::kHgg, LesionType::kLgg, LesionType::kMs};
    const int labels[3] = {1, 2, 4};
    for (std::size_t i = 0; i < cfg.detection_volumes; ++i) {
      out.push_back(gen.make(labels[i % 3], types[i % 3], i));
    }
    return out;
  }
  for (std::size_t i = 0; i < cfg.volumes_per_class; ++i) {
    for (int label = 0; label < static_cast<int>(cfg.classes); ++label) {
      out.push_back(gen.make(label, LesionType::kHgg, i));
    }
  }
  return out;
}

}  // namespace l2net
