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

#include "l2net/model.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "l2net/error.hpp"
#include "l2net/io.hpp"
#include "l2net/l2pool.hpp"
#include "l2net/ops.hpp"

namespace l2net {

namespace fs = std::filesystem;

namespace {

Tensor pool2(const Tensor& x, PoolKind kind, const L2PoolConfig& l2) {
  if (kind == PoolKind::kMax) return max_pool(x, 2, 2);
  return l2_pool(x, l2);
}

}  // namespace

ClassifierSpec ClassifierSpec::from(const RunConfig& cfg, std::size_t in_channels) {
  ClassifierSpec s;
  s.in_channels = in_channels;
  s.channels = cfg.channels;
  s.blocks = cfg.blocks;
  s.variant = cfg.residual_variant;
  s.pool = cfg.pooling;
  s.l2 = cfg.l2_config();
  return s;
}

Classifier Classifier::init(const ClassifierSpec& spec, Rng& rng) {
  Classifier net;
  net.spec = spec;
  net.stem = ConvLayer::kaiming(spec.in_channels, spec.channels, 3, 1, 1, rng);
  for (std::size_t b = 0; b < spec.blocks; ++b) {
    net.blocks.push_back(ResidualBlock::make(spec.variant, spec.channels, 3, rng));
  }
  net.head = DenseLayer::kaiming(spec.channels, spec.classes, rng);
  return net;
}

Tensor Classifier::forward(const Tensor& image) const {
  Tensor x = pool2(relu(conv2d(image, stem)), spec.pool, spec.l2);
  for (const auto& block : blocks) x = residual_forward(x, block);
  // The global pool is always the normalized (root-mean-square) form so the
  // head sees activations whose scale does not grow with the slice area.
  L2PoolConfig global = spec.l2;
  global.normalized = true;
  Tensor v = global_l2_pool(x, global);
  return reshape(dense(reshape(v, {1, spec.channels}), head), {spec.classes});
}

std::vector<NamedParam> Classifier::parameters() {
  std::vector<NamedParam> out{{"stem.weight", &stem.weight}, {"stem.bias", &stem.bias}};
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t s = 0; s < blocks[b].body.size(); ++s) {
      const std::string p = "block" + std::to_string(b) + ".conv" + std::to_string(s);
      out.push_back({p + ".weight", &blocks[b].body[s].conv.weight});
      out.push_back({p + ".bias", &blocks[b].body[s].conv.bias});
    }
  }
  out.push_back({"head.weight", &head.weight});
  out.push_back({"head.bias", &head.bias});
  return out;
}

DetectorSpec DetectorSpec::from(const RunConfig& cfg, std::size_t in_channels) {
  DetectorSpec s;
  s.in_channels = in_channels;
  s.c1 = cfg.det_channels.at(0);
  s.c2 = cfg.det_channels.at(1);
  s.hidden = cfg.det_hidden;
  s.pool = cfg.pooling;
  s.l2 = cfg.l2_config();
  s.pyramid = cfg.pyramid_spec();
  return s;
}

Detector Detector::init(const DetectorSpec& spec, Rng& rng) {
  Detector net;
  net.spec = spec;
  net.conv1_1 = ConvLayer::kaiming(spec.in_channels, spec.c1, 3, 1, 1, rng);
  net.conv1_2 = ConvLayer::kaiming(spec.c1, spec.c1, 3, 1, 1, rng);
  net.conv2_1 = ConvLayer::kaiming(spec.c1, spec.c2, 3, 1, 1, rng);
  net.conv2_2 = ConvLayer::kaiming(spec.c2, spec.c2, 3, 1, 1, rng);
  net.fc = DenseLayer::kaiming(spec.pyramid.output_length(spec.c2), spec.hidden, rng);
  net.cls = DenseLayer::kaiming(spec.hidden, 2, rng);
  net.bbox = DenseLayer::kaiming(spec.hidden, 4, rng);
  // Small initial offsets so early boxes stay near their proposals.
  std::vector<double> w(net.bbox.weight.values());
  for (double& v : w) v *= 0.1;
  net.bbox.weight = Tensor::create(net.bbox.weight.shape(), std::move(w), true);
  return net;
}

Tensor Detector::features(const Tensor& image) const {
  Tensor x = relu(conv2d(relu(conv2d(image, conv1_1)), conv1_2));
  x = pool2(x, spec.pool, spec.l2);
  return relu(conv2d(relu(conv2d(x, conv2_1)), conv2_2));
}

DetectorHeads Detector::heads(const Tensor& feature, Extent image_size,
                              const std::vector<RegionProposal>& boxes) const {
  const Extent fsize{static_cast<int>(feature.dim(2)), static_cast<int>(feature.dim(1))};
  std::vector<RegionProposal> mapped;
  mapped.reserve(boxes.size());
  for (const auto& b : boxes) mapped.push_back(map_box_to_grid(b, image_size, fsize));
  const Tensor pooled = pyramid_pool_batch(feature, mapped, spec.pyramid);
  const Tensor h = relu(dense(pooled, fc));
  return {dense(h, cls), dense(h, bbox)};
}

std::vector<NamedParam> Detector::parameters() {
  return {{"conv1_1.weight", &conv1_1.weight}, {"conv1_1.bias", &conv1_1.bias},
          {"conv1_2.weight", &conv1_2.weight}, {"conv1_2.bias", &conv1_2.bias},
          {"conv2_1.weight", &conv2_1.weight}, {"conv2_1.bias", &conv2_1.bias},
          {"conv2_2.weight", &conv2_2.weight}, {"conv2_2.bias", &conv2_2.bias},
          {"fc.weight", &fc.weight},           {"fc.bias", &fc.bias},
          {"cls.weight", &cls.weight},         {"cls.bias", &cls.bias},
          {"bbox.weight", &bbox.weight},       {"bbox.bias", &bbox.bias}};
}

namespace {

constexpr const char* kMagic = "l2net-checkpoint 1";

[[noreturn]] void mismatch(const std::string& dir, const std::string& why) {
  fail(ErrorCode::kCheckpointMismatch, "checkpoint " + dir + ": " + why);
}

}  // namespace

void save_checkpoint(const std::string& dir, const std::string& model,
                     const std::map<std::string, std::string>& hyper,
                     const std::vector<NamedParam>& params) {
  const fs::path target(dir);
  const fs::path tmp = fs::path(dir + ".tmp");
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp, ec);
  check(!ec, ErrorCode::kIoFailure, "cannot create " + tmp.string() + ": " + ec.message());
  std::ostringstream manifest;
  manifest << kMagic << "\n" << "model " << model << "\n";
  for (const auto& [k, v] : hyper) {
    check(k.find_first_of(" \n") == std::string::npos && v.find('\n') == std::string::npos,
          ErrorCode::kInvalidArgument, "hyperparameter key/value not serialisable: " + k);
    manifest << "hyper " << k << " " << v << "\n";
  }
  for (const auto& p : params) {
    const std::string file = p.name + ".txt";
    std::ostringstream body;
    write_tensor_text(body, *p.tensor);
    const std::string text = body.str();
    write_file_atomic((tmp / file).string(), text);
    manifest << "param " << p.name << " " << shape_to_string(p.tensor->shape()) << " "
             << file << " " << hex64(fnv1a64(text)) << "\n";
  }
  manifest << "end\n";
  write_file_atomic((tmp / "manifest.txt").string(), manifest.str());
  fs::remove_all(target, ec);
  fs::rename(tmp, target, ec);
  check(!ec, ErrorCode::kIoFailure, "cannot move checkpoint into " + dir + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "manifest.txt")) mismatch(dir, "missing manifest.txt");
  std::istringstream in(read_file((root / "manifest.txt").string()));
  std::string line;
  if (!std::getline(in, line) || line != kMagic) mismatch(dir, "bad manifest header");
  Checkpoint ck;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "model") {
      ls >> ck.model;
    } else if (tag == "hyper") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      ck.hyper[key] = value;
    } else if (tag == "param") {
      std::string name, shape, file, sum;
      ls >> name >> shape >> file >> sum;
      if (ls.fail()) mismatch(dir, "malformed param line: " + line);
      std::string text;
      try {
        text = read_file((root / file).string());
      } catch (const Error&) {
        mismatch(dir, "missing parameter file " + file);
      }
      if (hex64(fnv1a64(text)) != sum) mismatch(dir, "checksum mismatch for " + file);
      std::istringstream ts(text);
      Tensor t;
      try {
        t = read_tensor_text(ts);
      } catch (const Error& e) {
        mismatch(dir, "unreadable parameter " + name + ": " + e.what());
      }
      if (shape_to_string(t.shape()) != shape) mismatch(dir, "shape mismatch for " + name);
      ck.params.emplace(name, t.with_grad());
    } else {
      mismatch(dir, "unknown manifest line: " + line);
    }
  }
  if (!ended) mismatch(dir, "manifest is truncated");
  return ck;
}

namespace {

void restore(const Checkpoint& ck, std::vector<NamedParam> params) {
  if (ck.params.size() != params.size()) {
    fail(ErrorCode::kCheckpointMismatch, "checkpoint parameter count differs from the model");
  }
  for (auto& p : params) {
    const auto it = ck.params.find(p.name);
    if (it == ck.params.end()) fail(ErrorCode::kCheckpointMismatch, "checkpoint lacks " + p.name);
    if (it->second.shape() != p.tensor->shape()) {
      fail(ErrorCode::kCheckpointMismatch, "shape mismatch for " + p.name);
    }
    *p.tensor = it->second;
  }
}

RunConfig config_from(const Checkpoint& ck) {
  const auto it = ck.hyper.find("config");
  if (it == ck.hyper.end()) fail(ErrorCode::kCheckpointMismatch, "checkpoint lacks its config");
  std::string text = it->second;
  // Stored on one line with '|' separating entries.
  for (char& c : text) if (c == '|') c = '\n';
  try {
    return parse_config(text);
  } catch (const Error& e) {
    fail(ErrorCode::kCheckpointMismatch, std::string("checkpoint config: ") + e.what());
  }
}

std::map<std::string, std::string> hyper_for(const RunConfig& cfg, std::size_t in_channels) {
  std::string text = cfg.to_text();
  for (char& c : text) if (c == '\n') c = '|';
  return {{"config", text}, {"in_channels", std::to_string(in_channels)}};
}

std::size_t in_channels_of(const Checkpoint& ck) {
  const auto it = ck.hyper.find("in_channels");
  if (it == ck.hyper.end()) fail(ErrorCode::kCheckpointMismatch, "checkpoint lacks in_channels");
  return std::stoul(it->second);
}

}  // namespace

void save_classifier(const std::string& dir, Classifier& net, const RunConfig& cfg) {
  save_checkpoint(dir, "classifier", hyper_for(cfg, net.spec.in_channels), net.parameters());
}

void save_detector(const std::string& dir, Detector& net, const RunConfig& cfg) {
  save_checkpoint(dir, "detector", hyper_for(cfg, net.spec.in_channels), net.parameters());
}

Classifier load_classifier(const Checkpoint& ck, RunConfig* cfg) {
  if (ck.model != "classifier") fail(ErrorCode::kCheckpointMismatch, "not a classifier checkpoint");
  const RunConfig rc = config_from(ck);
  Rng rng(0);
  Classifier net = Classifier::init(ClassifierSpec::from(rc, in_channels_of(ck)), rng);
  restore(ck, net.parameters());
  if (cfg) *cfg = rc;
  return net;
}

Detector load_detector(const Checkpoint& ck, RunConfig* cfg) {
  if (ck.model != "detector") fail(ErrorCode::kCheckpointMismatch, "not a detector checkpoint");
  const RunConfig rc = config_from(ck);
  Rng rng(0);
  Detector net = Detector::init(DetectorSpec::from(rc, in_channels_of(ck)), rng);
  restore(ck, net.parameters());
  if (cfg) *cfg = rc;
  return net;
}

}  // namespace l2net
