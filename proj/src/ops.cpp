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

#include "l2net/ops.hpp"

#include <algorithm>

#include "l2net/autograd.hpp"
#include "l2net/error.hpp"
#include "l2net/kernels.hpp"

namespace l2net {

Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
        shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto x = a.data();
  const auto y = b.data();
  switch (op) {
    case Elementwise::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
      break;
    case Elementwise::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
      break;
    case Elementwise::kMul:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
      break;
  }
  return record_op({&a, &b}, a.shape(), std::move(out),
                   [op, a, b](std::span<const double> g,
                              std::span<const std::span<double>> gin) {
                     const std::size_t n = g.size();
                     auto ga = gin[0];
                     auto gb = gin[1];
                     switch (op) {
                       case Elementwise::kAdd:
                         if (!ga.empty()) for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                         if (!gb.empty()) for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
                         break;
                       case Elementwise::kSub:
                         if (!ga.empty()) for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                         if (!gb.empty()) for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
                         break;
                       case Elementwise::kMul:
                         if (!ga.empty()) for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * b[i];
                         if (!gb.empty()) for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * a[i];
                         break;
                     }
                   });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(Elementwise::kAdd, a, b);
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(Elementwise::kSub, a, b);
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(Elementwise::kMul, a, b);
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return record_op({&a}, a.shape(), std::move(out),
                   [factor](std::span<const double> g,
                            std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * factor;
                   });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return record_op({&a}, {1}, {s},
                   [](std::span<const double> g,
                      std::span<const std::span<double>> gin) {
                     for (double& v : gin[0]) v += g[0];
                   });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return record_op({&a}, a.shape(), std::move(out),
                   [a](std::span<const double> g,
                       std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       if (a[i] > 0.0) gin[0][i] += g[i];
                     }
                   });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2, ErrorCode::kShapeMismatch,
        "matmul needs rank-2 operands");
  check(a.dim(1) == b.dim(0), ErrorCode::kShapeMismatch,
        shape_to_string(a.shape()) + " x " + shape_to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  kernels::matmul(a.data(), b.data(), m, k, n, out);
  return record_op(
      {&a, &b}, {m, n}, std::move(out),
      [a, b, m, k, n](std::span<const double> g,
                      std::span<const std::span<double>> gin) {
        if (!gin[0].empty()) {
          // dA = G . B^T
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * b[p * n + j];
              gin[0][i * k + p] += acc;
            }
        }
        if (!gin[1].empty()) {
          // dB = A^T . G
          for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) {
              double acc = 0.0;
              for (std::size_t i = 0; i < m; ++i) acc += a[i * k + p] * g[i * n + j];
              gin[1][p * n + j] += acc;
            }
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  check(x.rank() == 2 && weight.rank() == 2 && bias.rank() == 1,
        ErrorCode::kShapeMismatch, "linear expects [n,in], [in,out], [out]");
  check(x.dim(1) == weight.dim(0) && weight.dim(1) == bias.dim(0),
        ErrorCode::kShapeMismatch,
        shape_to_string(x.shape()) + " . " + shape_to_string(weight.shape()) +
            " + " + shape_to_string(bias.shape()));
  const std::size_t m = x.dim(0), k = x.dim(1), n = weight.dim(1);
  std::vector<double> out(m * n);
  kernels::matmul(x.data(), weight.data(), m, k, n, out);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias[j];
  return record_op(
      {&x, &weight, &bias}, {m, n}, std::move(out),
      [x, weight, m, k, n](std::span<const double> g,
                           std::span<const std::span<double>> gin) {
        if (!gin[0].empty()) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * weight[p * n + j];
              gin[0][i * k + p] += acc;
            }
        }
        if (!gin[1].empty()) {
          for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) {
              double acc = 0.0;
              for (std::size_t i = 0; i < m; ++i) acc += x[i * k + p] * g[i * n + j];
              gin[1][p * n + j] += acc;
            }
        }
        if (!gin[2].empty()) {
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += g[i * n + j];
            gin[2][j] += acc;
          }
        }
      });
}

Tensor reshape(const Tensor& a, Shape shape) {
  check(shape_numel(shape) == a.numel(), ErrorCode::kShapeMismatch,
        "cannot reshape " + shape_to_string(a.shape()) + " to " +
            shape_to_string(shape));
  return record_op({&a}, std::move(shape), a.values(),
                   [](std::span<const double> g,
                      std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
                   });
}

namespace {

Tensor join(const std::vector<Tensor>& parts, Shape shape) {
  std::vector<const Tensor*> inputs;
  std::vector<double> out;
  out.reserve(shape_numel(shape));
  for (const auto& p : parts) {
    inputs.push_back(&p);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    off += p.numel();
  }
  return record_op(std::span<const Tensor* const>(inputs), std::move(shape),
                   std::move(out),
                   [offsets](std::span<const double> g,
                             std::span<const std::span<double>> gin) {
                     for (std::size_t p = 0; p < gin.size(); ++p) {
                       auto gi = gin[p];
                       for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[offsets[p] + i];
                     }
                   });
}

}  // namespace

Tensor stack(const std::vector<Tensor>& parts) {
  check(!parts.empty(), ErrorCode::kShapeMismatch, "stack of nothing");
  for (const auto& p : parts) {
    check(p.shape() == parts.front().shape(), ErrorCode::kShapeMismatch,
          "stack needs equal shapes");
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), parts.front().shape().begin(),
               parts.front().shape().end());
  return join(parts, std::move(shape));
}

Tensor concat(const std::vector<Tensor>& parts) {
  check(!parts.empty(), ErrorCode::kShapeMismatch, "concat of nothing");
  std::size_t total = 0;
  for (const auto& p : parts) total += p.numel();
  return join(parts, {total});
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  check(begin < end && end <= a.dim(0), ErrorCode::kShapeMismatch,
        "row range out of bounds");
  const std::size_t row = a.numel() / a.dim(0);
  Shape shape = a.shape();
  shape[0] = end - begin;
  std::vector<double> out(a.data().begin() + begin * row,
                          a.data().begin() + end * row);
  return record_op({&a}, std::move(shape), std::move(out),
                   [begin, row](std::span<const double> g,
                                std::span<const std::span<double>> gin) {
                     for (std::size_t i = 0; i < g.size(); ++i) gin[0][begin * row + i] += g[i];
                   });
}

}  // namespace l2net
