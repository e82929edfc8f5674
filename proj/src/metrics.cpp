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

#include "l2net/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "l2net/error.hpp"

namespace l2net {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : k_(classes), counts_(classes * classes, 0) {
  check(classes >= 1, ErrorCode::kInvalidArgument, "need at least one class");
}

void ConfusionMatrix::add(std::size_t actual, std::size_t predicted,
                          std::uint64_t n) {
  check(actual < k_ && predicted < k_, ErrorCode::kLabelOutOfRange,
        "class index outside [0," + std::to_string(k_) + ")");
  counts_[actual * k_ + predicted] += n;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t actual) const {
  std::uint64_t t = 0;
  for (std::size_t p = 0; p < k_; ++p) t += at(actual, p);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t t = 0;
  for (std::size_t a = 0; a < k_; ++a) t += at(a, predicted);
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(const std::vector<std::size_t>& predictions,
                          const std::vector<std::size_t>& labels,
                          std::size_t classes) {
  check(predictions.size() == labels.size(), ErrorCode::kShapeMismatch,
        "predictions and labels differ in length");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], predictions[i]);
  return cm;
}

EvalReport derive_metrics(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  check(total > 0, ErrorCode::kInvalidArgument, "empty confusion matrix");
  const std::size_t k = cm.classes();
  const double n = static_cast<double>(total);
  EvalReport r;
  r.n_samples = total;
  r.accuracy = static_cast<double>(cm.trace()) / n;
  double pe = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    pe += static_cast<double>(cm.row_sum(c)) * static_cast<double>(cm.col_sum(c));
  }
  pe /= n * n;
  if (pe >= 1.0) {
    r.kappa = 0.0;
    r.kappa_degenerate = true;
  } else {
    r.kappa = (r.accuracy - pe) / (1.0 - pe);
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const double fn = static_cast<double>(cm.row_sum(c)) - tp;
    const double fp = static_cast<double>(cm.col_sum(c)) - tp;
    const double tn = n - tp - fn - fp;
    ClassRates rates;
    rates.sensitivity = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    rates.specificity = tn + fp > 0 ? tn / (tn + fp) : 0.0;
    r.per_class.push_back(rates);
    r.sensitivity += rates.sensitivity;
    r.specificity += rates.specificity;
  }
  r.sensitivity /= static_cast<double>(k);
  r.specificity /= static_cast<double>(k);
  r.recall = r.sensitivity;
  r.confusion = cm;
  return r;
}

void Mask::paint(const RegionProposal& box) {
  for (int y = std::max(0, box.y0); y < std::min(height, box.y1); ++y)
    for (int x = std::max(0, box.x0); x < std::min(width, box.x1); ++x)
      bits[static_cast<std::size_t>(y * width + x)] = 1;
}

std::uint64_t Mask::count() const {
  std::uint64_t n = 0;
  for (auto b : bits) n += b;
  return n;
}

double dice(const Mask& a, const Mask& b) {
  check(a.width == b.width && a.height == b.height, ErrorCode::kDomainMismatch,
        "masks live on different grids");
  std::uint64_t inter = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    sa += a.bits[i];
    sb += b.bits[i];
    inter += a.bits[i] & b.bits[i];
  }
  if (sa + sb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(sa + sb);
}

double dice(const std::vector<RegionProposal>& a,
            const std::vector<RegionProposal>& b, int width, int height) {
  Mask ma(width, height), mb(width, height);
  for (const auto& box : a) ma.paint(box);
  for (const auto& box : b) mb.paint(box);
  return dice(ma, mb);
}

double detection_dice(const std::vector<RegionProposal>& detections,
                      const std::vector<RegionProposal>& ground_truth,
                      double score_threshold, int width, int height) {
  Mask md(width, height), mg(width, height);
  for (const auto& d : detections) {
    check(d.score.has_value(), ErrorCode::kUnscoredDetection,
          "detection_dice needs scored detections");
    if (*d.score >= score_threshold) md.paint(d);
  }
  for (const auto& g : ground_truth) mg.paint(g);
  return dice(md, mg);
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  fail(ErrorCode::kBadConfig, "format must be json or csv, got '" + s + "'");
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["sensitivity"] = r.sensitivity;
  j["specificity"] = r.specificity;
  j["recall"] = r.recall;
  j["kappa"] = r.kappa;
  j["dice"] = r.dice ? nlohmann::ordered_json(*r.dice) : nlohmann::ordered_json(nullptr);
  j["n_samples"] = r.n_samples;
  j["kappa_degenerate"] = r.kappa_degenerate;
  auto per = nlohmann::ordered_json::array();
  for (const auto& c : r.per_class) {
    per.push_back({{"sensitivity", c.sensitivity}, {"specificity", c.specificity}});
  }
  j["per_class"] = per;
  if (r.confusion) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < r.confusion->classes(); ++a) {
      auto row = nlohmann::ordered_json::array();
      for (std::size_t p = 0; p < r.confusion->classes(); ++p) row.push_back(r.confusion->at(a, p));
      rows.push_back(row);
    }
    j["confusion"] = rows;
  } else {
    j["confusion"] = nullptr;
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBadConfig, std::string("report JSON: ") + e.what());
  }
  EvalReport r;
  try {
    r.accuracy = j.at("accuracy").get<double>();
    r.sensitivity = j.at("sensitivity").get<double>();
    r.specificity = j.at("specificity").get<double>();
    r.recall = j.at("recall").get<double>();
    r.kappa = j.at("kappa").get<double>();
    if (!j.at("dice").is_null()) r.dice = j.at("dice").get<double>();
    r.n_samples = j.at("n_samples").get<std::uint64_t>();
    r.kappa_degenerate = j.value("kappa_degenerate", false);
    if (j.contains("per_class")) {
      for (const auto& c : j.at("per_class")) {
        r.per_class.push_back({c.at("sensitivity").get<double>(),
                               c.at("specificity").get<double>()});
      }
    }
    if (j.contains("confusion") && !j.at("confusion").is_null()) {
      const auto& rows = j.at("confusion");
      ConfusionMatrix cm(rows.size());
      for (std::size_t a = 0; a < rows.size(); ++a) {
        check(rows[a].size() == rows.size(), ErrorCode::kBadConfig,
              "confusion matrix must be square");
        for (std::size_t p = 0; p < rows.size(); ++p) cm.add(a, p, rows[a][p].get<std::uint64_t>());
      }
      r.confusion = cm;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBadConfig, std::string("report JSON: ") + e.what());
  }
  return r;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_csv(const EvalReport& r) {
  std::string s = "accuracy,sensitivity,specificity,recall,kappa,dice,n_samples\n";
  s += fmt17(r.accuracy) + "," + fmt17(r.sensitivity) + "," +
       fmt17(r.specificity) + "," + fmt17(r.recall) + "," + fmt17(r.kappa) +
       "," + (r.dice ? fmt17(*r.dice) : std::string()) + "," +
       std::to_string(r.n_samples) + "\n";
  return s;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string s = "iteration,train_loss,test_loss,test_accuracy\n";
  for (const auto& p : curve) {
    s += std::to_string(p.iteration) + "," + fmt17(p.train_loss) + "," +
         fmt17(p.test_loss) + "," + fmt17(p.test_accuracy) + "\n";
  }
  return s;
}

std::vector<CurvePoint> curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  check(static_cast<bool>(std::getline(in, line)) &&
            line == "iteration,train_loss,test_loss,test_accuracy",
        ErrorCode::kBadConfig, "curve CSV header mismatch");
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurvePoint p;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream ls(line);
    ls >> p.iteration >> c1 >> p.train_loss >> c2 >> p.test_loss >> c3 >> p.test_accuracy;
    check(!ls.fail() && c1 == ',' && c2 == ',' && c3 == ',', ErrorCode::kBadConfig,
          "bad curve row: " + line);
    out.push_back(p);
  }
  return out;
}

void emit_report(const EvalReport& report, const std::string& path,
                 ReportFormat format) {
  write_file_atomic(path, format == ReportFormat::kJson ? report_to_json(report)
                                                        : report_to_csv(report));
}

void emit_curve(const std::vector<CurvePoint>& curve, const std::string& path) {
  write_file_atomic(path, curve_to_csv(curve));
}

}  // namespace l2net
