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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "l2net/autograd.hpp"
#include "l2net/config.hpp"
#include "l2net/metrics.hpp"
#include "l2net/model.hpp"
#include "l2net/volume.hpp"

namespace l2net {

using Logger = std::function<void(const std::string&)>;

// On-disk dataset: volumes/<id>.mvol, splits.csv (volume_id,label,split)
// and manifest.json carrying the seed, the generating config and an FNV-1a
// checksum per volume file.
struct Dataset {
  Task task = Task::kClassify;
  std::uint64_t seed = 0;
  std::vector<MultiModalVolume> volumes;
  std::vector<std::string> split_of;  // parallel to volumes

  std::vector<const MultiModalVolume*> split(const std::string& name) const;
};

std::vector<std::string> split_names(Task task);
Dataset make_dataset(const RunConfig& cfg);
void write_dataset(const std::string& dir, const Dataset& data, const RunConfig& cfg);
Dataset load_dataset(const std::string& dir);

std::vector<AugmentOp> augment_ops(const RunConfig& cfg);
std::vector<FusedSlice> build_slices(const std::vector<const MultiModalVolume*>& vols,
                                     const RunConfig& cfg, bool with_augment);

// Class-balanced epoch: every class is resampled (cycling a seeded shuffle)
// up to the size of the largest class, then the whole list is shuffled.
std::vector<std::size_t> balanced_order(const std::vector<int>& labels, Rng& rng);

// SGD with momentum and L2 weight decay; velocities keyed by parameter name.
class Sgd {
 public:
  Sgd(double momentum, double weight_decay) : momentum_(momentum), decay_(weight_decay) {}
  void step(const std::vector<NamedParam>& params, const Gradients& grads, double lr);

 private:
  double momentum_, decay_;
  std::map<std::string, std::vector<double>> velocity_;
};

struct StepLog {
  std::size_t step = 0;
  double cls_loss = 0.0, bbox_loss = 0.0, total = 0.0;
};

struct ClassifyResult {
  Classifier net;
  std::vector<CurvePoint> curve;
  EvalReport report;
};

struct ClassifyEval {
  double loss = 0.0;
  EvalReport report;
};

ClassifyEval evaluate_classifier(const Classifier& net, const std::vector<FusedSlice>& slices);
ClassifyResult train_classifier(const RunConfig& cfg, const Dataset& data, const Logger& log = {});


// Scored, decoded, clipped and NMS-filtered boxes for one slice.
std::vector<RegionProposal> detect(const Detector& net, const FusedSlice& slice,
                                   const RunConfig& cfg);

struct DetectEval {
  double loss = 0.0;        // mean total loss over labelled proposals
  double mean_dice = 0.0;   // over slices with non-empty ground truth
  std::size_t slices = 0;
  EvalReport report;        // proposal-level bg/lesion metrics plus dice
};

DetectEval evaluate_detector(const Detector& net, const std::vector<FusedSlice>& slices,
                             const RunConfig& cfg);

struct DetectResult {
  Detector net;
  std::vector<CurvePoint> curve;  // test_loss/test_accuracy hold val loss/Dice
  std::vector<StepLog> steps;
  EvalReport report;              // on the test split
};

DetectResult train_detector(const RunConfig& cfg, const Dataset& data, const Logger& log = {});

}  // namespace l2net
