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

#include "l2net/losses.hpp"

#include <algorithm>
#include <cmath>

#include "l2net/autograd.hpp"
#include "l2net/error.hpp"
#include "l2net/ops.hpp"

namespace l2net {
namespace {

void check_labels(const Tensor& scores, const Labels& labels) {
  check(scores.rank() == 2, ErrorCode::kShapeMismatch,
        "scores must be [N,K], got " + shape_to_string(scores.shape()));
  check(labels.size() == scores.dim(0), ErrorCode::kShapeMismatch,
        "label count differs from row count");
  for (auto l : labels) {
    check(l < scores.dim(1), ErrorCode::kLabelOutOfRange,
          "label " + std::to_string(l) + " outside [0," +
              std::to_string(scores.dim(1)) + ")");
  }
}

}  // namespace

Tensor softmax_cross_entropy(const Tensor& logits, const Labels& labels) {
  check_labels(logits, labels);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  auto probs = std::make_shared<std::vector<double>>(n * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data().data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double log_z = std::log(z);
    for (std::size_t j = 0; j < k; ++j) {
      (*probs)[i * k + j] = std::exp(row[j] - mx - log_z);
    }
    loss += log_z - (row[labels[i]] - mx);
  }
  loss /= static_cast<double>(n);
  return record_op({&logits}, {1}, {loss},
                   [probs, labels, n, k](std::span<const double> g,
                                         std::span<const std::span<double>> gin) {
                     const double s = g[0] / static_cast<double>(n);
                     for (std::size_t i = 0; i < n; ++i) {
                       for (std::size_t j = 0; j < k; ++j) {
                         double d = (*probs)[i * k + j];
                         if (j == labels[i]) d -= 1.0;
                         gin[0][i * k + j] += s * d;
                       }
                     }
                   });
}

Tensor multiclass_hinge(const Tensor& scores, const Labels& labels,
                        double margin) {
  check(margin > 0.0, ErrorCode::kInvalidArgument, "margin must be > 0");
  check_labels(scores, labels);
  const std::size_t n = scores.dim(0), k = scores.dim(1);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = scores.data().data() + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == labels[i]) continue;
      loss += std::max(0.0, margin + row[j] - row[labels[i]]);
    }
  }
  loss /= static_cast<double>(n);
  return record_op({&scores}, {1}, {loss},
                   [scores, labels, margin, n, k](
                       std::span<const double> g,
                       std::span<const std::span<double>> gin) {
                     const double s = g[0] / static_cast<double>(n);
                     for (std::size_t i = 0; i < n; ++i) {
                       const double* row = scores.data().data() + i * k;
                       const std::size_t y = labels[i];
                       for (std::size_t j = 0; j < k; ++j) {
                         if (j == y) continue;
                         if (margin + row[j] - row[y] > 0.0) {
                           gin[0][i * k + j] += s;
                           gin[0][i * k + y] -= s;
                         }
                       }
                     }
                   });
}

Tensor smooth_l1_bbox(const Tensor& pred, const Tensor& target, double beta) {
  check(beta > 0.0, ErrorCode::kInvalidArgument, "beta must be > 0");
  check(pred.shape() == target.shape(), ErrorCode::kShapeMismatch,
        shape_to_string(pred.shape()) + " vs " +
            shape_to_string(target.shape()));
  check(pred.rank() == 2 && pred.dim(1) == 4, ErrorCode::kShapeMismatch,
        "boxes must be [N,4]");
  const std::size_t m = pred.numel();
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = pred[i] - target[i];
    const double a = std::abs(d);
    loss += a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
  }
  loss /= static_cast<double>(m);
  return record_op({&pred, &target}, {1}, {loss},
                   [pred, target, beta, m](std::span<const double> g,
                                           std::span<const std::span<double>> gin) {
                     const double s = g[0] / static_cast<double>(m);
                     for (std::size_t i = 0; i < m; ++i) {
                       const double d = pred[i] - target[i];
                       const double dd =
                           std::abs(d) < beta ? d / beta : (d > 0.0 ? 1.0 : -1.0);
                       if (!gin[0].empty()) gin[0][i] += s * dd;
                       if (!gin[1].empty()) gin[1][i] -= s * dd;
                     }
                   });
}

LossBundle detection_loss(const Tensor& cls, const Tensor& bbox,
                          double bbox_weight) {
  check(cls.is_scalar() && bbox.is_scalar(), ErrorCode::kNotScalarLoss,
        "detection_loss takes scalar losses");
  check(std::isfinite(cls.item()) && std::isfinite(bbox.item()) &&
            std::isfinite(bbox_weight),
        ErrorCode::kNonFiniteInput, "non-finite loss component");
  Tensor weighted = bbox_weight == 1.0 ? bbox : scale(bbox, bbox_weight);
  Tensor total = add(cls, weighted);
  return {cls, weighted, total};
}

}  // namespace l2net
