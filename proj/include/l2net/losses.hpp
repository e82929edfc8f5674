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

#include <cstddef>
#include <vector>

#include "l2net/tensor.hpp"

namespace l2net {

using Labels = std::vector<std::size_t>;

// Mean over rows of -log softmax(logits)[label], max-subtracted.
Tensor softmax_cross_entropy(const Tensor& logits, const Labels& labels);

// Mean over rows of sum_{k != label} max(0, margin + s_k - s_label).
Tensor multiclass_hinge(const Tensor& scores, const Labels& labels,
                        double margin = 1.0);

// Mean over all N*4 coordinates of the Huber-style smooth L1.
Tensor smooth_l1_bbox(const Tensor& pred, const Tensor& target,
                      double beta = 1.0);

struct LossBundle {
  Tensor cls_loss;
  Tensor bbox_loss;  // already multiplied by the regression weight
  Tensor total;      // cls_loss + bbox_loss
};

LossBundle detection_loss(const Tensor& cls, const Tensor& bbox,
                          double bbox_weight = 1.0);

}  // namespace l2net
