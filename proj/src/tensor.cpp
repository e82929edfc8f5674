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

#include "l2net/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "l2net/error.hpp"

namespace l2net {
namespace {

std::atomic<TensorId> next_id{1};
std::atomic<bool> debug_enabled{false};

bool all_finite(const std::vector<double>& data) {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor()
    : Tensor(std::make_shared<const Shape>(Shape{1}),
             std::make_shared<const std::vector<double>>(1, 0.0), false) {}

Tensor::Tensor(std::shared_ptr<const Shape> shape,
               std::shared_ptr<const std::vector<double>> data,
               bool requires_grad)
    : id_(next_id.fetch_add(1, std::memory_order_relaxed)),
      shape_(std::move(shape)),
      data_(std::move(data)),
      requires_grad_(requires_grad) {}

Tensor Tensor::create(Shape shape, std::vector<double> data,
                      bool requires_grad) {
  check(!shape.empty(), ErrorCode::kShapeMismatch, "empty shape");
  for (auto d : shape) {
    check(d > 0, ErrorCode::kShapeMismatch,
          "non-positive extent in " + shape_to_string(shape));
  }
  check(shape_numel(shape) == data.size(), ErrorCode::kShapeMismatch,
        "shape " + shape_to_string(shape) + " holds " +
            std::to_string(shape_numel(shape)) + " values, got " +
            std::to_string(data.size()));
  check(all_finite(data), ErrorCode::kNonFiniteInput,
        "tensor data contains NaN or Inf");
  return Tensor(std::make_shared<const Shape>(std::move(shape)),
                std::make_shared<const std::vector<double>>(std::move(data)),
                requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return create(std::move(shape), std::vector<double>(n, value),
                requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return create({1}, {value}, requires_grad);
}

Tensor Tensor::adopt(Shape shape, std::vector<double> data,
                     bool requires_grad) {
  if (debug_enabled.load(std::memory_order_relaxed)) {
    return create(std::move(shape), std::move(data), requires_grad);
  }
  return Tensor(std::make_shared<const Shape>(std::move(shape)),
                std::make_shared<const std::vector<double>>(std::move(data)),
                requires_grad);
}

double Tensor::item() const {
  check(is_scalar(), ErrorCode::kShapeMismatch,
        "item() on tensor of shape " + shape_to_string(shape()));
  return (*data_)[0];
}

Tensor Tensor::detach() const { return Tensor(shape_, data_, false); }

Tensor Tensor::with_grad() const { return Tensor(shape_, data_, true); }

bool same_values(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && a.values() == b.values();
}

void set_debug_checks(bool enabled) { debug_enabled.store(enabled); }
bool debug_checks() { return debug_enabled.load(); }

void write_tensor_text(std::ostream& out, const Tensor& t) {
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) out << ' ';
    out << t.dim(i);
  }
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < t.numel(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", t[i]);
    if (i) out << ' ';
    out << buf;
  }
  out << '\n';
}

Tensor read_tensor_text(std::istream& in) {
  std::string shape_line;
  std::string data_line;
  if (!std::getline(in, shape_line) || !std::getline(in, data_line)) {
    fail(ErrorCode::kTruncatedFile, "tensor text needs two lines");
  }
  Shape shape;
  {
    std::istringstream ss(shape_line);
    long long d;
    while (ss >> d) {
      check(d > 0, ErrorCode::kShapeMismatch, "non-positive extent");
      shape.push_back(static_cast<std::size_t>(d));
    }
    check(ss.eof(), ErrorCode::kShapeMismatch, "bad shape line");
  }
  std::vector<double> data;
  data.reserve(shape_numel(shape));
  {
    std::istringstream ss(data_line);
    std::string tok;
    while (ss >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      check(end && *end == '\0', ErrorCode::kNonFiniteInput,
            "unparseable value '" + tok + "'");
      data.push_back(v);
    }
  }
  return Tensor::create(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path);
  check(static_cast<bool>(out), ErrorCode::kIoFailure, "cannot open " + path);
  write_tensor_text(out, t);
  check(static_cast<bool>(out), ErrorCode::kIoFailure, "write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  check(static_cast<bool>(in), ErrorCode::kIoFailure, "cannot open " + path);
  return read_tensor_text(in);
}

}  // namespace l2net
