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
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace l2net {

using Shape = std::vector<std::size_t>;
using TensorId = std::uint64_t;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major float64 array. Immutable after construction; copies share
// storage. Every construction gets a fresh id so the tape can tell tensors
// apart even when they alias the same values.
class Tensor {
 public:
  Tensor();

  // Validated construction: product(shape) == data.size(), all finite.
  static Tensor create(Shape shape, std::vector<double> data,
                       bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  // Op-internal construction: skips the finiteness scan unless debug checks
  // are enabled.
  static Tensor adopt(Shape shape, std::vector<double> data,
                      bool requires_grad);

  TensorId id() const noexcept { return id_; }
  const Shape& shape() const noexcept { return *shape_; }
  std::size_t rank() const noexcept { return shape_->size(); }
  std::size_t dim(std::size_t axis) const { return shape_->at(axis); }
  std::size_t numel() const noexcept { return data_->size(); }
  bool requires_grad() const noexcept { return requires_grad_; }
  bool is_scalar() const noexcept { return data_->size() == 1; }

  std::span<const double> data() const noexcept { return *data_; }
  const std::vector<double>& values() const noexcept { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double item() const;

  // Same values, new identity.
  Tensor detach() const;
  Tensor with_grad() const;

 private:
  Tensor(std::shared_ptr<const Shape> shape,
         std::shared_ptr<const std::vector<double>> data, bool requires_grad);

  TensorId id_;
  std::shared_ptr<const Shape> shape_;
  std::shared_ptr<const std::vector<double>> data_;
  bool requires_grad_ = false;
};

bool same_values(const Tensor& a, const Tensor& b);

// Re-check every op output for NaN/Inf (off by default).
void set_debug_checks(bool enabled);
bool debug_checks();

// Text format: first line shape, second line values, %.17g.
void write_tensor_text(std::ostream& out, const Tensor& t);
Tensor read_tensor_text(std::istream& in);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace l2net
