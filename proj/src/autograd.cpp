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

#include "l2net/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l2net/error.hpp"

namespace l2net {
namespace {

thread_local GradTape* current_tape = nullptr;

}  // namespace

void GradTape::record(std::span<const Tensor* const> inputs,
                      const Tensor& output, BackwardFn backward) {
  Node node;
  node.inputs.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    node.inputs.push_back(t->id());
    node.input_sizes.push_back(t->numel());
    node.input_needs_grad.push_back(t->requires_grad());
  }
  node.output = output.id();
  node.output_size = output.numel();
  node.backward = std::move(backward);
  produced_.emplace(output.id(), nodes_.size());
  nodes_.push_back(std::move(node));
}

void GradTape::clear() {
  nodes_.clear();
  produced_.clear();
}

GradTape* active_tape() noexcept { return current_tape; }

TapeScope::TapeScope(GradTape& tape) noexcept : previous_(current_tape) {
  current_tape = &tape;
}

TapeScope::~TapeScope() { current_tape = previous_; }

Tensor Gradients::of(const Tensor& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) return Tensor::zeros(t.shape());
  check(it->second.numel() == t.numel(), ErrorCode::kShapeMismatch,
        "gradient size differs from tensor size");
  return Tensor::adopt(t.shape(), it->second.values(), false);
}

Gradients backward(const GradTape& tape, const Tensor& loss) {
  check(loss.is_scalar(), ErrorCode::kNotScalarLoss,
        "loss has shape " + shape_to_string(loss.shape()));
  check(tape.produced(loss.id()), ErrorCode::kDetachedLoss,
        "loss was not recorded on this tape");

  std::unordered_map<TensorId, std::vector<double>> acc;
  acc[loss.id()] = {1.0};

  const auto& nodes = tape.nodes();
  std::vector<std::span<double>> grad_in;
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    const auto& node = *it;
    auto out = acc.find(node.output);
    if (out == acc.end()) continue;
    grad_in.assign(node.inputs.size(), {});
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      if (!node.input_needs_grad[i]) continue;
      auto& buf = acc[node.inputs[i]];
      if (buf.empty()) buf.assign(node.input_sizes[i], 0.0);
      grad_in[i] = buf;
    }
    // acc may have rehashed above; look the output up again.
    const auto& gout = acc.find(node.output)->second;
    node.backward(gout, grad_in);
  }

  // The tape stores sizes only; `of` restores the caller's shape.
  Gradients result;
  for (auto& [id, buf] : acc) {
    const std::size_t n = buf.size();
    result.grads_.emplace(id, Tensor::adopt({n}, std::move(buf), false));
  }
  return result;
}

bool needs_recording(std::initializer_list<const Tensor*> inputs) {
  if (current_tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

Tensor record_op(std::span<const Tensor* const> inputs, Shape shape,
                 std::vector<double> data, BackwardFn backward) {
  bool track = current_tape != nullptr &&
               std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor* t) { return t->requires_grad(); });
  Tensor out = Tensor::adopt(std::move(shape), std::move(data), track);
  if (track) current_tape->record(inputs, out, std::move(backward));
  return out;
}

Tensor record_op(std::initializer_list<const Tensor*> inputs, Shape shape,
                 std::vector<double> data, BackwardFn backward) {
  return record_op(std::span<const Tensor* const>(inputs.begin(), inputs.size()),
                   std::move(shape), std::move(data), std::move(backward));
}

Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double h) {
  check(h > 0.0, ErrorCode::kInvalidArgument, "step must be positive");
  std::vector<double> probe = x.values();
  std::vector<double> grad(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(Tensor::create(x.shape(), probe));
    probe[i] = orig - h;
    const double fm = f(Tensor::create(x.shape(), probe));
    probe[i] = orig;
    check(std::isfinite(fp) && std::isfinite(fm),
          ErrorCode::kNonFiniteFunctionValue,
          "f is not finite near coordinate " + std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return Tensor::create(x.shape(), std::move(grad));
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  check(a.size() == b.size(), ErrorCode::kShapeMismatch,
        "relative_error on different lengths");
  double diff = 0.0;
  double scale = 1e-12;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

}  // namespace l2net
