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

#include <vector>

#include "l2net/tensor.hpp"

// Differentiable tensor ops. Each records onto the active tape when any
// input requires grad.
namespace l2net {

enum class Elementwise { kAdd, kSub, kMul };

Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor relu(const Tensor& a);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x [n,in] . weight [in,out] + bias [out]  ->  [n,out]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor reshape(const Tensor& a, Shape shape);
// Stacks equally-shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);
// Flattens and concatenates into a rank-1 tensor.
Tensor concat(const std::vector<Tensor>& parts);
// Rows [begin, end) of a tensor along its leading axis.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);

}  // namespace l2net
