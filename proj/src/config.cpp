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

#include "l2net/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "l2net/error.hpp"
#include "l2net/metrics.hpp"

namespace l2net {

std::string to_string(Task t) { return t == Task::kClassify ? "classify" : "detect"; }
std::string to_string(PoolKind p) { return p == PoolKind::kL2 ? "l2" : "max"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value,
                      const std::string& why) {
  fail(ErrorCode::kBadConfig, key + " = '" + value + "': " + why);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "expected a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    bad(key, v, "expected a number");
  }
  if (used != v.size() || !std::isfinite(out)) bad(key, v, "expected a finite number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, v, "expected true or false");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += f(xs[i]);
  }
  return s;
}

const auto kIdent = [](const std::string& s) { return s; };
const auto kSize = [](std::size_t v) { return std::to_string(v); };

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  auto sizes = [](const std::string& k, const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& p : split_on(s, ',')) out.push_back(parse_u64(k, p));
    return out;
  };
  auto doubles = [](const std::string& k, const std::string& s) {
    std::vector<double> out;
    for (const auto& p : split_on(s, ',')) out.push_back(parse_double(k, p));
    return out;
  };
  static const std::map<std::string, Setter> setters = {
      {"task", [](RunConfig& c, const std::string& k, const std::string& s) {
         if (s == "classify") c.task = Task::kClassify;
         else if (s == "detect") c.task = Task::kDetect;
         else bad(k, s, "expected classify or detect");
       }},
      {"pooling", [](RunConfig& c, const std::string& k, const std::string& s) {
         if (s == "l2") c.pooling = PoolKind::kL2;
         else if (s == "max") c.pooling = PoolKind::kMax;
         else bad(k, s, "expected l2 or max");
       }},
      {"gradient_mode", [](RunConfig& c, const std::string& k, const std::string& s) {
         if (s == "analytic") c.gradient_mode = GradientMode::kAnalytic;
         else if (s == "paper_literal") c.gradient_mode = GradientMode::kPaperLiteral;
         else bad(k, s, "expected analytic or paper_literal");
       }},
      {"l2_normalized", [](RunConfig& c, const std::string& k, const std::string& s) { c.l2_normalized = parse_bool(k, s); }},
      {"modalities", [](RunConfig& c, const std::string&, const std::string& s) { c.modalities = split_on(s, ','); }},
      {"fallbacks", [](RunConfig& c, const std::string& k, const std::string& s) {
         c.fallbacks.clear();
         for (const auto& pair : split_on(s, ',')) {
           const auto parts = split_on(pair, ':');
           if (parts.size() != 2) bad(k, s, "expected missing:replacement pairs");
           c.fallbacks[parts[0]] = parts[1];
         }
       }},
      {"pyramid_levels", [sizes](RunConfig& c, const std::string& k, const std::string& s) { c.pyramid_levels = sizes(k, s); }},
      {"views", [](RunConfig& c, const std::string& k, const std::string& s) {
         c.views.clear();
         for (const auto& p : split_on(s, ',')) {
           try {
             c.views.push_back(view_from_string(p));
           } catch (const Error&) {
             bad(k, s, "unknown view " + p);
           }
         }
       }},
      {"lesion_only", [](RunConfig& c, const std::string& k, const std::string& s) { c.lesion_only = parse_bool(k, s); }},
      {"augment", [](RunConfig& c, const std::string& k, const std::string& s) {
         c.augment.clear();
         if (s == "none") return;
         for (const auto& p : split_on(s, ',')) {
           if (p != "hflip" && p != "vflip" && p != "scale") bad(k, s, "unknown op " + p);
           c.augment.push_back(p);
         }
       }},
      {"scale_factors", [doubles](RunConfig& c, const std::string& k, const std::string& s) { c.scale_factors = doubles(k, s); }},
      {"epochs", [](RunConfig& c, const std::string& k, const std::string& s) { c.epochs = parse_u64(k, s); }},
      {"batch_size", [](RunConfig& c, const std::string& k, const std::string& s) { c.batch_size = parse_u64(k, s); }},
      {"learning_rate", [](RunConfig& c, const std::string& k, const std::string& s) { c.learning_rate = parse_double(k, s); }},
      {"momentum", [](RunConfig& c, const std::string& k, const std::string& s) { c.momentum = parse_double(k, s); }},
      {"weight_decay", [](RunConfig& c, const std::string& k, const std::string& s) { c.weight_decay = parse_double(k, s); }},
      {"lr_decay_epochs", [](RunConfig& c, const std::string& k, const std::string& s) { c.lr_decay_epochs = parse_u64(k, s); }},
      {"lr_decay_factor", [](RunConfig& c, const std::string& k, const std::string& s) { c.lr_decay_factor = parse_double(k, s); }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& s) { c.seed = parse_u64(k, s); }},
      {"split", [doubles](RunConfig& c, const std::string& k, const std::string& s) { c.split = doubles(k, s); }},
      {"eval_interval", [](RunConfig& c, const std::string& k, const std::string& s) { c.eval_interval = parse_u64(k, s); }},
      {"channels", [](RunConfig& c, const std::string& k, const std::string& s) { c.channels = parse_u64(k, s); }},
      {"blocks", [](RunConfig& c, const std::string& k, const std::string& s) { c.blocks = parse_u64(k, s); }},
      {"residual_variant", [](RunConfig& c, const std::string& k, const std::string& s) {
         if (s == "vanilla") c.residual_variant = ResidualVariant::kVanilla;
         else if (s == "dense") c.residual_variant = ResidualVariant::kDense;
         else bad(k, s, "expected vanilla or dense");
       }},
      {"det_channels", [sizes](RunConfig& c, const std::string& k, const std::string& s) { c.det_channels = sizes(k, s); }},
      {"det_hidden", [](RunConfig& c, const std::string& k, const std::string& s) { c.det_hidden = parse_u64(k, s); }},
      {"rois_per_image", [](RunConfig& c, const std::string& k, const std::string& s) { c.rois_per_image = parse_u64(k, s); }},
      {"fg_fraction", [](RunConfig& c, const std::string& k, const std::string& s) { c.fg_fraction = parse_double(k, s); }},
      {"bbox_weight", [](RunConfig& c, const std::string& k, const std::string& s) { c.bbox_weight = parse_double(k, s); }},
      {"score_threshold", [](RunConfig& c, const std::string& k, const std::string& s) { c.score_threshold = parse_double(k, s); }},
      {"nms_iou", [](RunConfig& c, const std::string& k, const std::string& s) { c.nms_iou = parse_double(k, s); }},
      {"synth_volumes_per_class", [](RunConfig& c, const std::string& k, const std::string& s) { c.synth_volumes_per_class = parse_u64(k, s); }},
      {"synth_detection_volumes", [](RunConfig& c, const std::string& k, const std::string& s) { c.synth_detection_volumes = parse_u64(k, s); }},
      {"synth_depth", [](RunConfig& c, const std::string& k, const std::string& s) { c.synth_depth = parse_u64(k, s); }},
      {"synth_height", [](RunConfig& c, const std::string& k, const std::string& s) { c.synth_height = parse_u64(k, s); }},
      {"synth_width", [](RunConfig& c, const std::string& k, const std::string& s) { c.synth_width = parse_u64(k, s); }},
      {"synth_modalities", [](RunConfig& c, const std::string&, const std::string& s) { c.synth_modalities = split_on(s, ','); }},
      {"ablation_subsets", [](RunConfig& c, const std::string&, const std::string& s) {
         c.ablation_subsets.clear();
         for (const auto& sub : split_on(s, ';')) c.ablation_subsets.push_back(split_on(sub, ','));
       }},
      {"data_dir", [](RunConfig& c, const std::string&, const std::string& s) { c.data_dir = s; }},
      {"checkpoint", [](RunConfig& c, const std::string&, const std::string& s) { c.checkpoint = s; }},
      {"eval_split", [](RunConfig& c, const std::string& k, const std::string& s) {
         if (s != "train" && s != "val" && s != "test") bad(k, s, "expected train, val or test");
         c.eval_split = s;
       }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) fail(ErrorCode::kBadConfig, "unknown config key '" + key + "'");
  it->second(*this, key, v);
}

std::string RunConfig::to_text() const {
  std::string s;
  auto line = [&s](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  line("task", to_string(task));
  line("pooling", to_string(pooling));
  line("gradient_mode", gradient_mode == GradientMode::kAnalytic ? "analytic" : "paper_literal");
  line("l2_normalized", l2_normalized ? "true" : "false");
  line("modalities", join(modalities, kIdent));
  std::string fb;
  for (const auto& [from, to] : fallbacks) fb += (fb.empty() ? "" : ",") + from + ":" + to;
  line("fallbacks", fb);
  line("pyramid_levels", join(pyramid_levels, kSize));
  line("views", join(views, [](View v) { return to_string(v); }));
  line("lesion_only", lesion_only ? "true" : "false");
  line("augment", augment.empty() ? "none" : join(augment, kIdent));
  line("scale_factors", join(scale_factors, fmt));
  line("epochs", std::to_string(epochs));
  line("batch_size", std::to_string(batch_size));
  line("learning_rate", fmt(learning_rate));
  line("momentum", fmt(momentum));
  line("weight_decay", fmt(weight_decay));
  line("lr_decay_epochs", std::to_string(lr_decay_epochs));
  line("lr_decay_factor", fmt(lr_decay_factor));
  line("seed", std::to_string(seed));
  line("split", join(split, fmt));
  line("eval_interval", std::to_string(eval_interval));
  line("channels", std::to_string(channels));
  line("blocks", std::to_string(blocks));
  line("residual_variant", residual_variant == ResidualVariant::kVanilla ? "vanilla" : "dense");
  line("det_channels", join(det_channels, kSize));
  line("det_hidden", std::to_string(det_hidden));
  line("rois_per_image", std::to_string(rois_per_image));
  line("fg_fraction", fmt(fg_fraction));
  line("bbox_weight", fmt(bbox_weight));
  line("score_threshold", fmt(score_threshold));
  line("nms_iou", fmt(nms_iou));
  line("synth_volumes_per_class", std::to_string(synth_volumes_per_class));
  line("synth_detection_volumes", std::to_string(synth_detection_volumes));
  line("synth_depth", std::to_string(synth_depth));
  line("synth_height", std::to_string(synth_height));
  line("synth_width", std::to_string(synth_width));
  line("synth_modalities", join(synth_modalities, kIdent));
  line("ablation_subsets", join(ablation_subsets, [](const std::vector<std::string>& sub) { return join(sub, kIdent); }, ";"));
  line("data_dir", data_dir);
  line("checkpoint", checkpoint);
  line("eval_split", eval_split);
  return s;
}

std::vector<double> RunConfig::split_fractions() const {
  if (!split.empty()) return split;
  if (task == Task::kClassify) return {0.8, 0.2};
  return {0.7, 0.1, 0.2};
}

L2PoolConfig RunConfig::l2_config() const {
  L2PoolConfig c;
  c.normalized = l2_normalized;
  c.gradient_mode = gradient_mode;
  return c;
}

PyramidSpec RunConfig::pyramid_spec() const {
  PyramidSpec p;
  p.levels = pyramid_levels;
  p.pool = pooling;
  p.normalized = l2_normalized;
  return p;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig s;
  s.volumes_per_class = synth_volumes_per_class;
  s.detection_volumes = synth_detection_volumes;
  s.depth = synth_depth;
  s.height = synth_height;
  s.width = synth_width;
  s.modalities = synth_modalities;
  s.seed = seed;
  s.detection = task == Task::kDetect;
  return s;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) { check(ok, ErrorCode::kBadConfig, msg); };
  need(!modalities.empty(), "modalities must not be empty");
  for (const auto& m : modalities) need(is_modality(m), "unknown modality " + m);
  for (const auto& [a, b] : fallbacks) need(is_modality(a) && is_modality(b), "fallback names must be modalities");
  for (const auto& m : synth_modalities) need(is_modality(m), "unknown modality " + m);
  need(!views.empty(), "views must not be empty");
  need(epochs >= 1, "epochs must be >= 1");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(learning_rate > 0.0, "learning_rate must be > 0");
  need(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0,1)");
  need(weight_decay >= 0.0, "weight_decay must be >= 0");
  need(eval_interval >= 1, "eval_interval must be >= 1");
  need(channels >= 1 && det_hidden >= 1 && rois_per_image >= 1, "layer widths must be >= 1");
  need(det_channels.size() == 2 && det_channels[0] >= 1 && det_channels[1] >= 1,
       "det_channels must list two widths");
  need(fg_fraction > 0.0 && fg_fraction <= 1.0, "fg_fraction must be in (0,1]");
  need(nms_iou > 0.0 && nms_iou <= 1.0, "nms_iou must be in (0,1]");
  need(bbox_weight >= 0.0, "bbox_weight must be >= 0");
  for (double s : scale_factors) need(s > 0.0, "scale factors must be positive");
  const auto fr = split_fractions();
  need(fr.size() == (task == Task::kClassify ? 2u : 3u),
       "split needs 2 fractions for classify, 3 for detect");
  double total = 0.0;
  for (double f : fr) {
    need(f >= 0.0, "split fractions must be >= 0");
    total += f;
  }
  need(std::abs(total - 1.0) < 1e-9, "split fractions must sum to 1");
  for (const auto& sub : ablation_subsets) {
    check(!sub.empty(), ErrorCode::kBadSubset, "empty modality subset");
    for (const auto& m : sub) check(is_modality(m), ErrorCode::kBadSubset, "unknown modality " + m);
  }
  pyramid_spec().validate();
  synth_config().validate();
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    check(eq != std::string::npos, ErrorCode::kBadConfig,
          "line " + std::to_string(n) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::kBadConfig, std::string("cannot read config: ") + e.what());
  }
  return parse_config(text, std::move(base));
}

}  // namespace l2net
