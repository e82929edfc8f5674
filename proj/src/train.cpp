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

#include "l2net/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "l2net/error.hpp"
#include "l2net/io.hpp"
#include "l2net/losses.hpp"
#include "l2net/ops.hpp"

namespace l2net {

namespace fs = std::filesystem;

std::vector<std::string> split_names(Task task) {
  if (task == Task::kClassify) return {"train", "test"};
  return {"train", "val", "test"};
}

std::vector<const MultiModalVolume*> Dataset::split(const std::string& name) const {
  std::vector<const MultiModalVolume*> out;
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (split_of[i] == name) out.push_back(&volumes[i]);
  }
  return out;
}

Dataset make_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset d;
  d.task = cfg.task;
  d.seed = cfg.seed;
  d.volumes = generate_synthetic_dataset(cfg.synth_config());
  std::vector<int> labels;
  for (const auto& v : d.volumes) labels.push_back(v.label);
  auto parts = stratified_split(labels, cfg.split_fractions(), cfg.seed);
  // Small sets can leave a stratified part empty; an unstratified
  // volume-level split still fills every part when there are enough volumes.
  const bool empty_part = std::any_of(parts.begin(), parts.end(),
                                      [](const auto& p) { return p.empty(); });
  if (empty_part) parts = split_indices(labels.size(), cfg.split_fractions(), cfg.seed);
  const auto names = split_names(cfg.task);
  d.split_of.assign(d.volumes.size(), "");
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (auto i : parts[p]) d.split_of[i] = names[p];
  }
  return d;
}

void write_dataset(const std::string& dir, const Dataset& data, const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "volumes", ec);
  check(!ec, ErrorCode::kIoFailure, "cannot create " + dir + ": " + ec.message());
  nlohmann::ordered_json manifest;
  manifest["format"] = "l2net-dataset";
  manifest["version"] = 1;
  manifest["task"] = to_string(data.task);
  manifest["seed"] = data.seed;
  manifest["config"] = cfg.to_text();
  auto vols = nlohmann::ordered_json::array();
  std::string csv = "volume_id,label,split\n";
  for (std::size_t i = 0; i < data.volumes.size(); ++i) {
    const auto& v = data.volumes[i];
    const std::string file = "volumes/" + v.id + ".mvol";
    const auto bytes = encode_volume(v);
    const std::string blob(bytes.begin(), bytes.end());
    write_file_atomic((fs::path(dir) / file).string(), blob);
    vols.push_back({{"id", v.id},
                    {"file", file},
                    {"label", v.label},
                    {"split", data.split_of[i]},
                    {"fnv1a64", hex64(fnv1a64(blob))}});
    csv += v.id + "," + std::to_string(v.label) + "," + data.split_of[i] + "\n";
  }
  manifest["volumes"] = vols;
  write_file_atomic((fs::path(dir) / "splits.csv").string(), csv);
  write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  check(fs::exists(root / "manifest.json"), ErrorCode::kDatasetMissing,
        "no dataset at " + dir + " (run `l2net synth` first)");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file((root / "manifest.json").string()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kDatasetMissing, "unreadable dataset manifest: " + std::string(e.what()));
  }
  Dataset d;
  try {
    const std::string task = m.at("task").get<std::string>();
    check(task == "classify" || task == "detect", ErrorCode::kDatasetMissing,
          "manifest task must be classify or detect");
    d.task = task == "classify" ? Task::kClassify : Task::kDetect;
    d.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& v : m.at("volumes")) {
      const std::string path = (root / v.at("file").get<std::string>()).string();
      check(fs::exists(path), ErrorCode::kDatasetMissing, "missing volume file " + path);
      const std::string blob = read_file(path);
      check(hex64(fnv1a64(blob)) == v.at("fnv1a64").get<std::string>(),
            ErrorCode::kChecksumMismatch, "checksum mismatch for " + path);
      d.volumes.push_back(load_volume(path));
      check(d.volumes.back().label == v.at("label").get<int>(), ErrorCode::kDatasetMissing,
            "label in " + path + " disagrees with the manifest");
      d.split_of.push_back(v.at("split").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kDatasetMissing, "malformed dataset manifest: " + std::string(e.what()));
  }
  return d;
}

std::vector<AugmentOp> augment_ops(const RunConfig& cfg) {
  std::vector<AugmentOp> ops;
  for (const auto& name : cfg.augment) {
    if (name == "hflip") ops.push_back({AugmentOp::Kind::kHFlip, 1.0});
    if (name == "vflip") ops.push_back({AugmentOp::Kind::kVFlip, 1.0});
    if (name == "scale") {
      for (double f : cfg.scale_factors) ops.push_back({AugmentOp::Kind::kScale, f});
    }
  }
  return ops;
}

std::vector<FusedSlice> build_slices(const std::vector<const MultiModalVolume*>& vols,
                                     const RunConfig& cfg, bool with_augment) {
  const auto ops = with_augment ? augment_ops(cfg) : std::vector<AugmentOp>{};
  std::vector<FusedSlice> out;
  for (const auto* vol : vols) {
    for (View view : cfg.views) {
      for (auto& s : extract_slices(*vol, view, cfg.lesion_only, cfg.modalities, cfg.fallbacks)) {
        if (ops.empty()) {
          out.push_back(std::move(s));
        } else {
          for (auto& a : augment(s, ops)) out.push_back(std::move(a));
        }
      }
    }
  }
  return out;
}

std::vector<std::size_t> balanced_order(const std::vector<int>& labels, Rng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::size_t largest = 0;
  for (const auto& [c, idx] : by_class) largest = std::max(largest, idx.size());
  std::vector<std::size_t> order;
  for (auto& [c, idx] : by_class) {
    std::vector<std::size_t> pool;
    while (pool.size() < largest) {
      std::vector<std::size_t> round = idx;
      std::shuffle(round.begin(), round.end(), rng);
      pool.insert(pool.end(), round.begin(), round.end());
    }
    order.insert(order.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(largest));
  }
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void Sgd::step(const std::vector<NamedParam>& params, const Gradients& grads, double lr) {
  for (const auto& p : params) {
    const Tensor g = grads.of(*p.tensor);
    const auto w = p.tensor->data();
    const auto gd = g.data();
    auto& v = velocity_[p.name];
    if (v.empty()) v.assign(w.size(), 0.0);
    std::vector<double> next(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] - lr * (gd[i] + decay_ * w[i]);
      next[i] = w[i] + v[i];
    }
    *p.tensor = Tensor::adopt(p.tensor->shape(), std::move(next), true);
  }
}

namespace {

double learning_rate_at(const RunConfig& cfg, std::size_t epoch) {
  if (cfg.lr_decay_epochs == 0) return cfg.learning_rate;
  return cfg.learning_rate *
         std::pow(cfg.lr_decay_factor, static_cast<double>(epoch / cfg.lr_decay_epochs));
}

void check_finite_loss(double v, std::size_t step) {
  if (!std::isfinite(v)) {
    fail(ErrorCode::kDivergedLoss, "loss became non-finite at step " + std::to_string(step) +
                                       "; lower learning_rate");
  }
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

std::size_t channel_count(const RunConfig& cfg) { return cfg.modalities.size(); }

constexpr std::uint64_t kSamplerSalt = 0x9e3779b97f4a7c15ull;

}  // namespace

ClassifyEval evaluate_classifier(const Classifier& net, const std::vector<FusedSlice>& slices) {
  check(!slices.empty(), ErrorCode::kDatasetMissing, "no slices to evaluate");
  std::vector<std::size_t> preds, labels;
  double loss = 0.0;
  for (const auto& s : slices) {
    const Tensor logits = net.forward(s.image);
    const auto z = logits.data();
    const std::size_t best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    preds.push_back(best);
    labels.push_back(static_cast<std::size_t>(s.label));
    loss += softmax_cross_entropy(reshape(logits, {1, z.size()}), {labels.back()}).item();
  }
  ClassifyEval out;
  out.loss = loss / static_cast<double>(slices.size());
  out.report = derive_metrics(confusion(preds, labels, net.spec.classes));
  return out;
}

ClassifyResult train_classifier(const RunConfig& cfg, const Dataset& data, const Logger& log) {
  cfg.validate();
  check(data.task == Task::kClassify, ErrorCode::kDatasetMissing,
        "train-classify needs a classification dataset");
  const auto train = build_slices(data.split("train"), cfg, true);
  const auto test = build_slices(data.split("test"), cfg, false);
  check(!train.empty() && !test.empty(), ErrorCode::kDatasetMissing,
        "dataset has an empty train or test split");
  std::vector<int> labels;
  for (const auto& s : train) labels.push_back(s.label);

  Rng init_rng(cfg.seed);
  Rng sampler(cfg.seed ^ kSamplerSalt);
  ClassifyResult res{Classifier::init(ClassifierSpec::from(cfg, channel_count(cfg)), init_rng), {}, {}};
  Classifier& net = res.net;
  Sgd sgd(cfg.momentum, cfg.weight_decay);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg, epoch);
    const auto order = balanced_order(labels, sampler);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      GradTape tape;
      Tensor loss;
      {
        TapeScope scope(tape);
        std::vector<Tensor> rows;
        Labels y;
        for (std::size_t i = b; i < e; ++i) {
          rows.push_back(net.forward(train[order[i]].image));
          y.push_back(static_cast<std::size_t>(train[order[i]].label));
        }
        loss = softmax_cross_entropy(stack(rows), y);
      }
      ++step;
      check_finite_loss(loss.item(), step);
      sgd.step(net.parameters(), backward(tape, loss), lr);
      epoch_loss += loss.item();
      ++batches;
    }
    if ((epoch + 1) % cfg.eval_interval == 0 || epoch + 1 == cfg.epochs) {
      const auto ev = evaluate_classifier(net, test);
      res.curve.push_back({step, epoch_loss / static_cast<double>(batches), ev.loss,
                           ev.report.accuracy});
      if (log) {
        log("epoch " + std::to_string(epoch + 1) +
            fmt(": train_loss %.4f test_loss %.4f test_acc %.4f", res.curve.back().train_loss,
                ev.loss, ev.report.accuracy));
      }
    }
  }
  res.report = evaluate_classifier(net, test).report;
  return res;
}

namespace {

struct RoiBatch {
  std::vector<RegionProposal> boxes;  // foreground first
  Labels labels;
  std::vector<double> targets;        // 4 per foreground box
  std::size_t n_fg = 0;
};

std::vector<RegionProposal> gt_boxes(const FusedSlice& s) {
  std::vector<RegionProposal> out;
  for (const auto& g : s.boxes) out.push_back(g.box);
  return out;
}

Extent extent_of(const FusedSlice& s) {
  return {static_cast<int>(s.image.dim(2)), static_cast<int>(s.image.dim(1))};
}

ProposalConfig proposal_config(const RunConfig& cfg) {
  ProposalConfig pc;
  pc.seed = cfg.seed;
  return pc;
}

// Proposals plus the ground truth, labelled; sampled to at most `limit`
// rois with a foreground cap unless limit == 0 (keep everything).
RoiBatch sample_rois(const std::vector<RegionProposal>& proposals, const FusedSlice& s,
                     std::size_t limit, double fg_fraction, Rng* rng) {
  std::vector<RegionProposal> cands = proposals;
  for (const auto& g : s.boxes) cands.push_back(g.box);
  const auto labelled = label_proposals(cands, s.boxes);
  std::vector<std::size_t> fg, bg;
  for (std::size_t i = 0; i < labelled.size(); ++i) {
    (labelled[i].cls > 0 ? fg : bg).push_back(i);
  }
  std::size_t n_fg = fg.size(), n_bg = bg.size();
  if (limit > 0) {
    std::shuffle(fg.begin(), fg.end(), *rng);
    std::shuffle(bg.begin(), bg.end(), *rng);
    n_fg = std::min(fg.size(), static_cast<std::size_t>(std::floor(fg_fraction * static_cast<double>(limit))));
    n_bg = std::min(bg.size(), limit - n_fg);
  }
  RoiBatch r;
  r.n_fg = n_fg;
  for (std::size_t i = 0; i < n_fg; ++i) {
    const auto& lp = labelled[fg[i]];
    r.boxes.push_back(lp.proposal);
    r.labels.push_back(1);
    const auto& t = lp.regression_target;
    r.targets.insert(r.targets.end(), {t.tx, t.ty, t.tw, t.th});
  }
  for (std::size_t i = 0; i < n_bg; ++i) {
    r.boxes.push_back(labelled[bg[i]].proposal);
    r.labels.push_back(0);
  }
  return r;
}

struct RoiLoss {
  Tensor cls;
  std::optional<Tensor> bbox;
  DetectorHeads heads;
};

RoiLoss roi_loss(const Detector& net, const Tensor& feature, const FusedSlice& s,
                 const RoiBatch& rois) {
  RoiLoss out{Tensor(), std::nullopt, net.heads(feature, extent_of(s), rois.boxes)};
  out.cls = multiclass_hinge(out.heads.scores, rois.labels);
  if (rois.n_fg > 0) {
    out.bbox = smooth_l1_bbox(slice_rows(out.heads.deltas, 0, rois.n_fg),
                              Tensor::create({rois.n_fg, 4}, rois.targets));
  }
  return out;
}

}  // namespace

std::vector<RegionProposal> detect(const Detector& net, const FusedSlice& slice,
                                   const RunConfig& cfg) {
  const auto proposals = generate_proposals(slice.image, proposal_config(cfg));
  if (proposals.empty()) return {};
  const Extent ext = extent_of(slice);
  const auto h = net.heads(net.features(slice.image), ext, proposals);
  const auto sc = h.scores.data();
  const auto dl = h.deltas.data();
  std::vector<RegionProposal> kept;
  for (std::size_t r = 0; r < proposals.size(); ++r) {
    const double score = sc[2 * r + 1] - sc[2 * r];
    if (score < cfg.score_threshold) continue;
    const BoxTarget t{dl[4 * r], dl[4 * r + 1], dl[4 * r + 2], dl[4 * r + 3]};
    auto box = clip_box(decode_box(proposals[r], t), ext.width, ext.height);
    if (!box) continue;
    box->score = score;
    kept.push_back(*box);
  }
  return nms(kept, cfg.nms_iou);
}

DetectEval evaluate_detector(const Detector& net, const std::vector<FusedSlice>& slices,
                             const RunConfig& cfg) {
  check(!slices.empty(), ErrorCode::kDatasetMissing, "no slices to evaluate");
  DetectEval out;
  std::vector<std::size_t> preds, labels;
  double dice_sum = 0.0, loss_sum = 0.0;
  for (const auto& s : slices) {
    const auto gt = gt_boxes(s);
    const Extent ext = extent_of(s);
    const auto proposals = generate_proposals(s.image, proposal_config(cfg));
    const auto rois = sample_rois(proposals, s, 0, 1.0, nullptr);
    const Tensor feature = net.features(s.image);
    const auto rl = roi_loss(net, feature, s, rois);
    loss_sum += rl.cls.item() + (rl.bbox ? cfg.bbox_weight * rl.bbox->item() : 0.0);
    const auto sc = rl.heads.scores.data();
    for (std::size_t r = 0; r < rois.boxes.size(); ++r) {
      preds.push_back(sc[2 * r + 1] > sc[2 * r] ? 1 : 0);
      labels.push_back(rois.labels[r]);
    }
    if (!gt.empty()) {
      dice_sum += detection_dice(detect(net, s, cfg), gt, cfg.score_threshold, ext.width, ext.height);
      ++out.slices;
    }
  }
  out.loss = loss_sum / static_cast<double>(slices.size());
  out.mean_dice = out.slices ? dice_sum / static_cast<double>(out.slices) : 0.0;
  out.report = derive_metrics(confusion(preds, labels, 2));
  out.report.dice = out.mean_dice;
  return out;
}

DetectResult train_detector(const RunConfig& cfg, const Dataset& data, const Logger& log) {
  cfg.validate();
  check(data.task == Task::kDetect, ErrorCode::kDatasetMissing,
        "train-detect needs a detection dataset (synth with task = detect)");
  const auto train = build_slices(data.split("train"), cfg, true);
  const auto val = build_slices(data.split("val"), cfg, false);
  const auto test = build_slices(data.split("test"), cfg, false);
  check(!train.empty() && !val.empty() && !test.empty(), ErrorCode::kDatasetMissing,
        "dataset has an empty train, val or test split");
  std::vector<std::vector<RegionProposal>> proposals;
  proposals.reserve(train.size());
  for (const auto& s : train) proposals.push_back(generate_proposals(s.image, proposal_config(cfg)));

  Rng init_rng(cfg.seed);
  Rng sampler(cfg.seed ^ kSamplerSalt);
  DetectResult res{Detector::init(DetectorSpec::from(cfg, channel_count(cfg)), init_rng), {}, {}, {}};
  Detector& net = res.net;
  Sgd sgd(cfg.momentum, cfg.weight_decay);
  std::vector<std::size_t> order(train.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate_at(cfg, epoch);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), sampler);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      GradTape tape;
      std::optional<LossBundle> bundle;
      {
        TapeScope scope(tape);
        std::vector<Tensor> cls_terms, bbox_terms;
        for (std::size_t i = b; i < e; ++i) {
          const auto& s = train[order[i]];
          const auto rois = sample_rois(proposals[order[i]], s, cfg.rois_per_image,
                                        cfg.fg_fraction, &sampler);
          const auto rl = roi_loss(net, net.features(s.image), s, rois);
          cls_terms.push_back(rl.cls);
          if (rl.bbox) bbox_terms.push_back(*rl.bbox);
        }
        if (bbox_terms.empty()) {
          if (log) log("warning: NoForegroundProposals in batch at step " + std::to_string(step + 1) + "; skipped");
          continue;
        }
        const double inv = 1.0 / static_cast<double>(e - b);
        const Tensor cls = scale(sum(stack(cls_terms)), inv);
        const Tensor bbox = scale(sum(stack(bbox_terms)), inv);
        ++step;
        check_finite_loss(cls.item() + bbox.item(), step);
        bundle = detection_loss(cls, bbox, cfg.bbox_weight);
      }
      const LossBundle& lb = *bundle;
      res.steps.push_back({step, lb.cls_loss.item(), lb.bbox_loss.item(), lb.total.item()});
      sgd.step(net.parameters(), backward(tape, lb.total), lr);
      epoch_loss += lb.total.item();
      ++batches;
    }
    if ((epoch + 1) % cfg.eval_interval == 0 || epoch + 1 == cfg.epochs) {
      const auto ev = evaluate_detector(net, val, cfg);
      res.curve.push_back({step, batches ? epoch_loss / static_cast<double>(batches) : 0.0,
                           ev.loss, ev.mean_dice});
      if (log) {
        log("epoch " + std::to_string(epoch + 1) +
            fmt(": train_loss %.4f val_loss %.4f val_dice %.4f", res.curve.back().train_loss,
                ev.loss, ev.mean_dice));
      }
    }
  }
  res.report = evaluate_detector(net, test, cfg).report;
  return res;
}

}  // namespace l2net
