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

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "l2net/kernels.hpp"

namespace l2net::kernels::serial {
namespace {

// Output rows/cols whose input coordinate o*stride + tap - pad is in [0, n).
struct Range {
  std::ptrdiff_t lo, hi;  // half-open
};

Range valid_range(std::size_t n, std::size_t n_out, std::size_t stride,
                  std::size_t pad, std::size_t tap) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto off = static_cast<std::ptrdiff_t>(tap) -
                   static_cast<std::ptrdiff_t>(pad);
  std::ptrdiff_t lo = 0;
  if (off < 0) lo = (-off + s - 1) / s;
  std::ptrdiff_t hi = (static_cast<std::ptrdiff_t>(n) - 1 - off);
  hi = hi < 0 ? 0 : hi / s + 1;
  if (hi > static_cast<std::ptrdiff_t>(n_out)) {
    hi = static_cast<std::ptrdiff_t>(n_out);
  }
  if (lo > hi) lo = hi;
  return {lo, hi};
}

}  // namespace

void conv2d_forward(std::span<const double> in, std::span<const double> wt,
                    std::span<const double> bias, const ConvGeom& g,
                    std::span<double> out) {
  const std::size_t hw_in = g.h * g.w;
  const std::size_t hw_out = g.h_out * g.w_out;
  const std::size_t kk = g.k * g.k;
  for (std::size_t oc = 0; oc < g.c_out; ++oc) {
    double* o = out.data() + oc * hw_out;
    for (std::size_t i = 0; i < hw_out; ++i) o[i] = 0.0;
    for (std::size_t ic = 0; ic < g.c_in; ++ic) {
      const double* x = in.data() + ic * hw_in;
      const double* w = wt.data() + (oc * g.c_in + ic) * kk;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        const Range ry = valid_range(g.h, g.h_out, g.stride, g.pad, ky);
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const Range rx = valid_range(g.w, g.w_out, g.stride, g.pad, kx);
          const double wv = w[ky * g.k + kx];
          for (auto oy = ry.lo; oy < ry.hi; ++oy) {
            const std::size_t iy = oy * g.stride + ky - g.pad;
            const double* xrow = x + iy * g.w;
            double* orow = o + oy * g.w_out;
            for (auto ox = rx.lo; ox < rx.hi; ++ox) {
              orow[ox] += xrow[ox * g.stride + kx - g.pad] * wv;
            }
          }
        }
      }
    }
    for (std::size_t i = 0; i < hw_out; ++i) o[i] += bias[oc];
  }
}

void conv2d_backward_input(std::span<const double> gout,
                           std::span<const double> wt, const ConvGeom& g,
                           std::span<double> gin) {
  const std::size_t hw_in = g.h * g.w;
  const std::size_t hw_out = g.h_out * g.w_out;
  const std::size_t kk = g.k * g.k;
  for (std::size_t ic = 0; ic < g.c_in; ++ic) {
    double* gx = gin.data() + ic * hw_in;
    for (std::size_t oc = 0; oc < g.c_out; ++oc) {
      const double* go = gout.data() + oc * hw_out;
      const double* w = wt.data() + (oc * g.c_in + ic) * kk;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        const Range ry = valid_range(g.h, g.h_out, g.stride, g.pad, ky);
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const Range rx = valid_range(g.w, g.w_out, g.stride, g.pad, kx);
          const double wv = w[ky * g.k + kx];
          for (auto oy = ry.lo; oy < ry.hi; ++oy) {
            const std::size_t iy = oy * g.stride + ky - g.pad;
            double* gxrow = gx + iy * g.w;
            const double* gorow = go + oy * g.w_out;
            for (auto ox = rx.lo; ox < rx.hi; ++ox) {
              gxrow[ox * g.stride + kx - g.pad] += gorow[ox] * wv;
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_params(std::span<const double> gout,
                            std::span<const double> in, const ConvGeom& g,
                            std::span<double> gwt, std::span<double> gbias) {
  const std::size_t hw_in = g.h * g.w;
  const std::size_t hw_out = g.h_out * g.w_out;
  const std::size_t kk = g.k * g.k;
  for (std::size_t oc = 0; oc < g.c_out; ++oc) {
    const double* go = gout.data() + oc * hw_out;
    double bsum = 0.0;
    for (std::size_t i = 0; i < hw_out; ++i) bsum += go[i];
    gbias[oc] += bsum;
    for (std::size_t ic = 0; ic < g.c_in; ++ic) {
      const double* x = in.data() + ic * hw_in;
      double* gw = gwt.data() + (oc * g.c_in + ic) * kk;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        const Range ry = valid_range(g.h, g.h_out, g.stride, g.pad, ky);
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const Range rx = valid_range(g.w, g.w_out, g.stride, g.pad, kx);
          double acc = 0.0;
          for (auto oy = ry.lo; oy < ry.hi; ++oy) {
            const std::size_t iy = oy * g.stride + ky - g.pad;
            const double* xrow = x + iy * g.w;
            const double* gorow = go + oy * g.w_out;
            for (auto ox = rx.lo; ox < rx.hi; ++ox) {
              acc += gorow[ox] * xrow[ox * g.stride + kx - g.pad];
            }
          }
          gw[ky * g.k + kx] += acc;
        }
      }
    }
  }
}

void l2pool_forward(std::span<const double> in, const PoolGeom& g,
                    bool normalized, std::span<double> out) {
  const double n = static_cast<double>(g.filter * g.filter);
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* x = in.data() + c * g.h * g.w;
    double* o = out.data() + c * g.h_out * g.w_out;
    for (std::size_t oy = 0; oy < g.h_out; ++oy) {
      for (std::size_t ox = 0; ox < g.w_out; ++ox) {
        double sum = 0.0;
        for (std::size_t dy = 0; dy < g.filter; ++dy) {
          const double* row = x + (oy * g.stride + dy) * g.w + ox * g.stride;
          for (std::size_t dx = 0; dx < g.filter; ++dx) sum += row[dx] * row[dx];
        }
        o[oy * g.w_out + ox] = normalized ? std::sqrt(sum / n) : std::sqrt(sum);
      }
    }
  }
}

void l2pool_backward(std::span<const double> in, std::span<const double> gout,
                     const PoolGeom& g, bool normalized, L2Backward mode,
                     double epsilon, std::span<double> gin) {
  const double n = static_cast<double>(g.filter * g.filter);
  const double scale = normalized ? std::sqrt(n) : 1.0;
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* x = in.data() + c * g.h * g.w;
    const double* go = gout.data() + c * g.h_out * g.w_out;
    double* gx = gin.data() + c * g.h * g.w;
    for (std::size_t oy = 0; oy < g.h_out; ++oy) {
      for (std::size_t ox = 0; ox < g.w_out; ++ox) {
        const std::size_t base = oy * g.stride * g.w + ox * g.stride;
        double sum = 0.0;
        for (std::size_t dy = 0; dy < g.filter; ++dy) {
          const double* row = x + base + dy * g.w;
          for (std::size_t dx = 0; dx < g.filter; ++dx) sum += row[dx] * row[dx];
        }
        const double norm = std::max(std::sqrt(sum), epsilon);
        const double up = go[oy * g.w_out + ox];
        if (mode == L2Backward::kAnalytic) {
          const double k = up / (scale * norm);
          for (std::size_t dy = 0; dy < g.filter; ++dy) {
            const std::size_t r = base + dy * g.w;
            for (std::size_t dx = 0; dx < g.filter; ++dx) {
              gx[r + dx] += x[r + dx] * k;
            }
          }
        } else {
          const double v = n * up / (2.0 * norm);
          for (std::size_t dy = 0; dy < g.filter; ++dy) {
            const std::size_t r = base + dy * g.w;
            for (std::size_t dx = 0; dx < g.filter; ++dx) gx[r + dx] += v;
          }
        }
      }
    }
  }
}

void maxpool_forward(std::span<const double> in, const PoolGeom& g,
                     std::span<double> out, std::span<std::size_t> argmax) {
  for (std::size_t c = 0; c < g.c; ++c) {
    const std::size_t plane = c * g.h * g.w;
    for (std::size_t oy = 0; oy < g.h_out; ++oy) {
      for (std::size_t ox = 0; ox < g.w_out; ++ox) {
        std::size_t best = plane + oy * g.stride * g.w + ox * g.stride;
        for (std::size_t dy = 0; dy < g.filter; ++dy) {
          for (std::size_t dx = 0; dx < g.filter; ++dx) {
            const std::size_t idx =
                plane + (oy * g.stride + dy) * g.w + ox * g.stride + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (c * g.h_out + oy) * g.w_out + ox;
        out[o] = in[best];
        argmax[o] = best;
      }
    }
  }
}

void maxpool_backward(std::span<const double> gout,
                      std::span<const std::size_t> argmax, const PoolGeom& g,
                      std::span<double> gin) {
  const std::size_t total = g.c * g.h_out * g.w_out;
  for (std::size_t o = 0; o < total; ++o) gin[argmax[o]] += gout[o];
}

void matmul(std::span<const double> a, std::span<const double> b,
            std::size_t m, std::size_t k, std::size_t n,
            std::span<double> out) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

}  // namespace l2net::kernels::serial
