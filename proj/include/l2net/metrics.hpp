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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l2net/io.hpp"
#include "l2net/proposals.hpp"

namespace l2net {

// Rows = actual class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  std::size_t classes() const { return k_; }
  std::uint64_t at(std::size_t actual, std::size_t predicted) const {
    return counts_[actual * k_ + predicted];
  }
  void add(std::size_t actual, std::size_t predicted, std::uint64_t n = 1);
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t actual) const;
  std::uint64_t col_sum(std::size_t predicted) const;
  std::uint64_t trace() const;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(const std::vector<std::size_t>& predictions,
                          const std::vector<std::size_t>& labels,
                          std::size_t classes);

struct ClassRates {
  double sensitivity = 0.0;  // TP / (TP + FN), 0 when the class is absent
  double specificity = 0.0;  // TN / (TN + FP)
};

struct EvalReport {
  double accuracy = 0.0;
  double sensitivity = 0.0;  // macro one-vs-rest
  double specificity = 0.0;  // macro one-vs-rest
  double recall = 0.0;       // macro one-vs-rest (same reduction as sensitivity)
  double kappa = 0.0;
  std::optional<double> dice;
  std::uint64_t n_samples = 0;
  bool kappa_degenerate = false;
  std::vector<ClassRates> per_class;
  std::optional<ConfusionMatrix> confusion;
};

// Kappa with p_e == 1 is reported as 0 with kappa_degenerate set.
EvalReport derive_metrics(const ConfusionMatrix& cm);

// Binary masks on the same grid; dice(empty, empty) == 1.
struct Mask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> bits;

  Mask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w * h), 0) {}
  void paint(const RegionProposal& box);
  std::uint64_t count() const;
};

double dice(const Mask& a, const Mask& b);
// Union-of-boxes dice on a w x h grid.
double dice(const std::vector<RegionProposal>& a,
            const std::vector<RegionProposal>& b, int width, int height);

// Rasterises detections scoring >= threshold and the ground truth, then
// returns mask dice. Detections must be scored.
double detection_dice(const std::vector<RegionProposal>& detections,
                      const std::vector<RegionProposal>& ground_truth,
                      double score_threshold, int width, int height);

struct CurvePoint {
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

enum class ReportFormat { kJson, kCsv };
ReportFormat report_format_from_string(const std::string& s);

// JSON keys: accuracy, sensitivity, specificity, recall, kappa, dice,
// n_samples (in that order), then kappa_degenerate, per_class, confusion.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
// One header row and one value row with the headline metric columns.
std::string report_to_csv(const EvalReport& report);

std::string curve_to_csv(const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> curve_from_csv(const std::string& text);

void emit_report(const EvalReport& report, const std::string& path,
                 ReportFormat format);
void emit_curve(const std::vector<CurvePoint>& curve, const std::string& path);

}  // namespace l2net
