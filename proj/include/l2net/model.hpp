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

#include <map>
#include <string>
#include <vector>

#include "l2net/config.hpp"
#include "l2net/layers.hpp"
#include "l2net/proposals.hpp"
#include "l2net/pyramid.hpp"

namespace l2net {

struct NamedParam {
  std::string name;
  Tensor* tensor;
};

// conv -> relu -> pool(2,2) -> residual blocks -> global l2 -> dense.
// The first pool is l2 or max depending on `pool`.
struct ClassifierSpec {
  std::size_t in_channels = 3;
  std::size_t channels = 12;
  std::size_t blocks = 2;
  std::size_t classes = 5;
  ResidualVariant variant = ResidualVariant::kVanilla;
  PoolKind pool = PoolKind::kL2;
  L2PoolConfig l2;

  static ClassifierSpec from(const RunConfig& cfg, std::size_t in_channels);
};

struct Classifier {
  ClassifierSpec spec;
  ConvLayer stem;
  std::vector<ResidualBlock> blocks;
  DenseLayer head;

  static Classifier init(const ClassifierSpec& spec, Rng& rng);
  Tensor forward(const Tensor& image) const;  // [C,H,W] -> [classes]
  std::vector<NamedParam> parameters();
};

// conv1_1, conv1_2, pool, conv2_1, conv2_2 feature stack; every proposal is
// pyramid-pooled from the feature map and fed to a shared fc layer with two
// sibling heads (2-way hinge scores and 4 box offsets).
struct DetectorSpec {
  std::size_t in_channels = 3;
  std::size_t c1 = 8, c2 = 16;
  std::size_t hidden = 32;
  PoolKind pool = PoolKind::kL2;
  L2PoolConfig l2;
  PyramidSpec pyramid;

  static DetectorSpec from(const RunConfig& cfg, std::size_t in_channels);
};

struct DetectorHeads {
  Tensor scores;  // [R,2]
  Tensor deltas;  // [R,4]
};

struct Detector {
  DetectorSpec spec;
  ConvLayer conv1_1, conv1_2, conv2_1, conv2_2;
  DenseLayer fc, cls, bbox;

  static Detector init(const DetectorSpec& spec, Rng& rng);
  Tensor features(const Tensor& image) const;
  // Boxes are in image coordinates; image_size is the input plane.
  DetectorHeads heads(const Tensor& feature, Extent image_size,
                      const std::vector<RegionProposal>& boxes) const;
  std::vector<NamedParam> parameters();
};

// Checkpoint directory: manifest.txt (model kind, hyperparameters, one line
// per parameter with shape and file) plus one tensor text file per
// parameter. Written to a sibling temp directory and renamed into place.
struct Checkpoint {
  std::string model;  // "classifier" or "detector"
  std::map<std::string, std::string> hyper;
  std::map<std::string, Tensor> params;
};

void save_checkpoint(const std::string& dir, const std::string& model,
                     const std::map<std::string, std::string>& hyper,
                     const std::vector<NamedParam>& params);
Checkpoint load_checkpoint(const std::string& dir);

void save_classifier(const std::string& dir, Classifier& net, const RunConfig& cfg);
void save_detector(const std::string& dir, Detector& net, const RunConfig& cfg);
// Restores the network and the RunConfig it was trained with.
Classifier load_classifier(const Checkpoint& ckpt, RunConfig* cfg);
Detector load_detector(const Checkpoint& ckpt, RunConfig* cfg);

}  // namespace l2net
