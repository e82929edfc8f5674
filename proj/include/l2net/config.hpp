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
#include <string>
#include <vector>

#include "l2net/l2pool.hpp"
#include "l2net/layers.hpp"
#include "l2net/pyramid.hpp"
#include "l2net/volume.hpp"

namespace l2net {

enum class Task { kClassify, kDetect };
std::string to_string(Task t);
std::string to_string(PoolKind p);

// Every experiment knob. The text form is `key = value` per line, `#`
// comments; list values are comma separated; unknown keys are rejected.
struct RunConfig {
  Task task = Task::kClassify;
  PoolKind pooling = PoolKind::kL2;
  GradientMode gradient_mode = GradientMode::kAnalytic;
  bool l2_normalized = false;
  std::vector<std::string> modalities{"T1", "T1c", "FLAIR"};
  ModalityFallbacks fallbacks;
  std::vector<std::size_t> pyramid_levels{4, 2, 1};
  std::vector<View> views{View::kAxial};
  bool lesion_only = true;
  std::vector<std::string> augment{"hflip", "vflip"};
  std::vector<double> scale_factors{0.75, 1.25};

  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t lr_decay_epochs = 0;  // 0 = constant rate
  double lr_decay_factor = 0.1;
  std::uint64_t seed = 2024;
  std::vector<double> split;  // empty = task default (0.8/0.2 or 0.7/0.1/0.2)
  std::size_t eval_interval = 1;

  std::size_t channels = 12;
  std::size_t blocks = 2;
  ResidualVariant residual_variant = ResidualVariant::kVanilla;
  std::vector<std::size_t> det_channels{8, 16};
  std::size_t det_hidden = 32;
  std::size_t rois_per_image = 32;
  double fg_fraction = 0.5;
  double bbox_weight = 1.0;
  double score_threshold = 0.0;
  double nms_iou = 0.3;

  std::size_t synth_volumes_per_class = 12;
  std::size_t synth_detection_volumes = 20;
  std::size_t synth_depth = 12, synth_height = 32, synth_width = 32;
  std::vector<std::string> synth_modalities{"T1", "T1c", "T2", "FLAIR"};

  // Semicolon-separated subsets, each a comma list of modalities.
  std::vector<std::vector<std::string>> ablation_subsets{
      {"T1"}, {"T1c"}, {"T2"}, {"FLAIR"}, {"T1", "T1c", "T2", "FLAIR"}};

  std::string data_dir = "data";
  std::string checkpoint;
  std::string eval_split = "test";

  std::vector<double> split_fractions() const;
  L2PoolConfig l2_config() const;
  PyramidSpec pyramid_spec() const;
  SynthConfig synth_config() const;
  void validate() const;

  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
};

RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

}  // namespace l2net
