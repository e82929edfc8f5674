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
#include <span>
#include <unordered_map>
#include <vector>

#include "l2net/tensor.hpp"

namespace l2net {

// grad_in[i] is empty when input i does not need a gradient. Rules must
// accumulate (+=) into grad_in, never overwrite.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<const std::span<double>> grad_in)>;

class GradTape {
 public:
  struct Node {
    std::vector<TensorId> inputs;
    std::vector<std::size_t> input_sizes;
    std::vector<bool> input_needs_grad;
    TensorId output;
    std::size_t output_size;
    BackwardFn backward;
  };

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  void record(std::span<const Tensor* const> inputs, const Tensor& output,
              BackwardFn backward);
  bool produced(TensorId id) const { return produced_.contains(id); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  void clear();

 private:
  std::vector<Node> nodes_;
  std::unordered_map<TensorId, std::size_t> produced_;
};

// Thread-local active tape. Ops record onto it whenever at least one input
// requires grad; without an active tape nothing is recorded.
GradTape* active_tape() noexcept;

class TapeScope {
 public:
  explicit TapeScope(GradTape& tape) noexcept;
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradTape* previous_;
};

class Gradients {
 public:
  bool has(const Tensor& t) const { return grads_.contains(t.id()); }
  // Zero tensor of t's shape if t was unreachable from the loss.
  Tensor of(const Tensor& t) const;
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend Gradients backward(const GradTape& tape, const Tensor& loss);
  std::unordered_map<TensorId, Tensor> grads_;
};

Gradients backward(const GradTape& tape, const Tensor& loss);

// Helpers for op implementations.
bool needs_recording(std::initializer_list<const Tensor*> inputs);
Tensor record_op(std::initializer_list<const Tensor*> inputs, Shape shape,
                 std::vector<double> data, BackwardFn backward);
Tensor record_op(std::span<const Tensor* const> inputs, Shape shape,
                 std::vector<double> data, BackwardFn backward);

// Central differences, one coordinate at a time.
Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double h = 1e-5);

// ||a - b||_inf / max(||a||_inf, ||b||_inf, 1e-12)
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace l2net
