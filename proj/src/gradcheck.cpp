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

#include "l2net/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "json.hpp"
#include "l2net/autograd.hpp"
#include "l2net/error.hpp"
#include "l2net/l2pool.hpp"
#include "l2net/losses.hpp"
#include "l2net/ops.hpp"

namespace l2net {

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass: return "PASS";
    case CheckStatus::kFail: return "FAIL";
    case CheckStatus::kExpectedFail: return "EXPECTED FAIL";
    case CheckStatus::kUnexpectedPass: return "UNEXPECTED PASS";
  }
  return "?";
}

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::create(std::move(shape), std::move(v));
}

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double contract(const Tensor& out, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) s += out[i] * weights[i];
  return s;
}

struct Trial {
  MultiInputFn f;
  std::vector<Tensor> inputs;
};

using TrialGenerator = std::function<std::optional<Trial>(Rng&)>;

SuiteResult run_suite(const std::string& name, const GradcheckOptions& opts,
                      const TrialGenerator& gen) {
  // FNV-1a of the suite name keeps suites independent of each other.
  std::uint64_t salt = 1469598103934665603ULL;
  for (unsigned char ch : name) salt = (salt ^ ch) * 1099511628211ULL;
  Rng rng(opts.seed * 0x9E3779B97F4A7C15ULL + salt);
  SuiteResult r;
  r.name = name;
  r.min_rel_error = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < opts.trials; ++t) {
    std::optional<Trial> trial;
    for (int attempt = 0; attempt < 1000 && !trial; ++attempt) trial = gen(rng);
    check(trial.has_value(), ErrorCode::kInvalidArgument,
          name + ": could not sample a smooth point");
    const double err = gradient_relative_error(trial->f, trial->inputs, rng);
    ++r.trials;
    r.max_rel_error = std::max(r.max_rel_error, err);
    r.min_rel_error = std::min(r.min_rel_error, err);
    if (!(err < opts.tolerance)) ++r.failures;
    if (!(err <= 1e-2)) ++r.discrepancies;
  }
  r.status = r.failures == 0 ? CheckStatus::kPass : CheckStatus::kFail;
  return r;
}

bool l2_windows_clear(const Tensor& x, std::size_t f, std::size_t s) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t oy = 0; oy + f <= h; oy += s)
      for (std::size_t ox = 0; ox + f <= w; ox += s) {
        double sum = 0.0;
        for (std::size_t dy = 0; dy < f; ++dy)
          for (std::size_t dx = 0; dx < f; ++dx) {
            const double v = x[(ch * h + oy + dy) * w + ox + dx];
            sum += v * v;
          }
        if (std::sqrt(sum) < 1e-3) return false;
      }
  return true;
}

bool max_windows_clear(const Tensor& x, std::size_t f, std::size_t s) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t oy = 0; oy + f <= h; oy += s)
      for (std::size_t ox = 0; ox + f <= w; ox += s) {
        double first = -1e300, second = -1e300;
        for (std::size_t dy = 0; dy < f; ++dy)
          for (std::size_t dx = 0; dx < f; ++dx) {
            const double v = x[(ch * h + oy + dy) * w + ox + dx];
            if (v > first) {
              second = first;
              first = v;
            } else if (v > second) {
              second = v;
            }
          }
        if (f * f > 1 && first - second < 1e-3) return false;
      }
  return true;
}

std::optional<Trial> l2_trial(Rng& rng, GradientMode mode) {
  L2PoolConfig cfg;
  cfg.filter_size = uniform_int(rng, 1, 3);
  cfg.stride = uniform_int(rng, 1, 2);
  cfg.normalized = uniform_int(rng, 0, 1) == 1;
  cfg.gradient_mode = mode;
  if (mode == GradientMode::kPaperLiteral) {
    cfg.filter_size = uniform_int(rng, 2, 3);
    cfg.normalized = false;
  }
  const std::size_t h = uniform_int(rng, cfg.filter_size, 8);
  const std::size_t w = uniform_int(rng, cfg.filter_size, 8);
  Tensor x = random_tensor({uniform_int(rng, 1, 3), h, w}, rng);
  if (!l2_windows_clear(x, cfg.filter_size, cfg.stride)) return std::nullopt;
  return Trial{[cfg](const std::vector<Tensor>& in) { return l2_pool(in[0], cfg); },
               {x}};
}

}  // namespace

double gradient_relative_error(const MultiInputFn& f,
                               const std::vector<Tensor>& inputs, Rng& rng,
                               double h) {
  const Tensor probe = f(inputs);
  const Tensor weights = random_tensor(probe.shape(), rng);

  std::vector<Tensor> tracked;
  for (const auto& t : inputs) tracked.push_back(t.with_grad());
  GradTape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(mul(f(tracked), weights));
  }
  const Gradients grads = backward(tape, loss);

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto fi = [&](const Tensor& xi) {
      std::vector<Tensor> args = inputs;
      args[i] = xi;
      return contract(f(args), weights);
    };
    const Tensor numeric = finite_difference_grad(fi, inputs[i], h);
    const Tensor analytic = grads.of(tracked[i]);
    worst = std::max(worst, relative_error(analytic.data(), numeric.data()));
  }
  return worst;
}

SuiteResult check_l2_pool(const GradcheckOptions& opts) {
  return run_suite("l2_pool", opts, [](Rng& rng) {
    return l2_trial(rng, GradientMode::kAnalytic);
  });
}

SuiteResult check_global_l2_pool(const GradcheckOptions& opts) {
  return run_suite("global_l2_pool", opts, [](Rng& rng) -> std::optional<Trial> {
    L2PoolConfig cfg;
    cfg.normalized = uniform_int(rng, 0, 1) == 1;
    Tensor x = random_tensor(
        {uniform_int(rng, 1, 4), uniform_int(rng, 1, 6), uniform_int(rng, 1, 6)},
        rng);
    const std::size_t plane = x.dim(1) * x.dim(2);
    for (std::size_t ch = 0; ch < x.dim(0); ++ch) {
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += x[ch * plane + i] * x[ch * plane + i];
      if (std::sqrt(sum) < 1e-3) return std::nullopt;
    }
    return Trial{[cfg](const std::vector<Tensor>& in) {
                   return global_l2_pool(in[0], cfg);
                 },
                 {x}};
  });
}

SuiteResult check_l2_pool_paper_literal(const GradcheckOptions& opts) {
  SuiteResult r = run_suite("l2_pool[paper_literal]", opts, [](Rng& rng) {
    return l2_trial(rng, GradientMode::kPaperLiteral);
  });
  r.informational = true;
  r.expected_failures = (opts.trials * 95 + 99) / 100;
  r.status = r.discrepancies >= r.expected_failures ? CheckStatus::kExpectedFail
                                                    : CheckStatus::kUnexpectedPass;
  return r;
}

SuiteResult check_conv2d(const GradcheckOptions& opts) {
  return run_suite("conv2d", opts, [](Rng& rng) -> std::optional<Trial> {
    const std::size_t cin = uniform_int(rng, 1, 3), cout = uniform_int(rng, 1, 3);
    const std::size_t k = uniform_int(rng, 1, 3);
    const std::size_t stride = uniform_int(rng, 1, 2);
    const std::size_t pad = uniform_int(rng, 0, 1);
    const std::size_t h = uniform_int(rng, k, 6), w = uniform_int(rng, k, 6);
    Tensor x = random_tensor({cin, h, w}, rng);
    Tensor wt = random_tensor({cout, cin, k, k}, rng);
    Tensor b = random_tensor({cout}, rng);
    return Trial{[stride, pad](const std::vector<Tensor>& in) {
                   return conv2d(in[0], ConvLayer{in[1], in[2], stride, pad});
                 },
                 {x, wt, b}};
  });
}

SuiteResult check_max_pool(const GradcheckOptions& opts) {
  return run_suite("max_pool", opts, [](Rng& rng) -> std::optional<Trial> {
    const std::size_t f = uniform_int(rng, 1, 3), s = uniform_int(rng, 1, 2);
    Tensor x = random_tensor(
        {uniform_int(rng, 1, 3), uniform_int(rng, f, 8), uniform_int(rng, f, 8)},
        rng);
    if (!max_windows_clear(x, f, s)) return std::nullopt;
    return Trial{[f, s](const std::vector<Tensor>& in) {
                   return max_pool(in[0], f, s);
                 },
                 {x}};
  });
}

SuiteResult check_residual(const GradcheckOptions& opts,
                           ResidualVariant variant) {
  const std::string name = variant == ResidualVariant::kVanilla
                               ? "residual[vanilla]"
                               : "residual[dense]";
  return run_suite(name, opts, [variant](Rng& rng) -> std::optional<Trial> {
    const std::size_t c = uniform_int(rng, 1, 3);
    const std::size_t h = uniform_int(rng, 3, 6), w = uniform_int(rng, 3, 6);
    ResidualBlock block = ResidualBlock::make(variant, c, 3, rng);
    Tensor x = random_tensor({c, h, w}, rng);
    for (const auto& pre : residual_preactivations(x, block)) {
      for (double v : pre.data()) {
        if (std::abs(v) <= 1e-3) return std::nullopt;
      }
    }
    // Input and first-stage weights are both checked.
    Tensor w0 = block.body.front().conv.weight.detach();
    return Trial{[block](const std::vector<Tensor>& in) {
                   ResidualBlock b = block;
                   b.body.front().conv.weight = in[1];
                   return residual_forward(in[0], b);
                 },
                 {x, w0}};
  });
}

SuiteResult check_dense(const GradcheckOptions& opts) {
  return run_suite("dense", opts, [](Rng& rng) -> std::optional<Trial> {
    const std::size_t n = uniform_int(rng, 1, 4), in = uniform_int(rng, 1, 6),
                      out = uniform_int(rng, 1, 5);
    return Trial{[](const std::vector<Tensor>& t) {
                   return linear(t[0], t[1], t[2]);
                 },
                 {random_tensor({n, in}, rng), random_tensor({in, out}, rng),
                  random_tensor({out}, rng)}};
  });
}

SuiteResult check_softmax_ce(const GradcheckOptions& opts) {
  return run_suite("softmax_ce", opts, [](Rng& rng) -> std::optional<Trial> {
    const std::size_t n = uniform_int(rng, 1, 4), k = uniform_int(rng, 2, 6);
    Labels labels(n);
    for (auto& l : labels) l = uniform_int(rng, 0, k - 1);
    return Trial{[labels](const std::vector<Tensor>& t) {
                   return softmax_cross_entropy(t[0], labels);
                 },
                 {random_tensor({n, k}, rng, 2.0)}};
  });
}

SuiteResult check_hinge(const GradcheckOptions& opts) {
  return run_suite("multiclass_hinge", opts, [](Rng& rng) -> std::optional<Trial> {
    const std::size_t n = uniform_int(rng, 1, 4), k = uniform_int(rng, 2, 6);
    const double margin = 1.0;
    Labels labels(n);
    for (auto& l : labels) l = uniform_int(rng, 0, k - 1);
    Tensor s = random_tensor({n, k}, rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        if (j == labels[i]) continue;
        if (std::abs(margin + s[i * k + j] - s[i * k + labels[i]]) <= 1e-3) {
          return std::nullopt;
        }
      }
    return Trial{[labels, margin](const std::vector<Tensor>& t) {
                   return multiclass_hinge(t[0], labels, margin);
                 },
                 {s}};
  });
}

SuiteResult check_smooth_l1(const GradcheckOptions& opts) {
  return run_suite("smooth_l1", opts, [](Rng& rng) -> std::optional<Trial> {
    const std::size_t n = uniform_int(rng, 1, 4);
    const double beta = 1.0;
    Tensor p = random_tensor({n, 4}, rng, 1.5);
    Tensor t = random_tensor({n, 4}, rng, 1.5);
    for (std::size_t i = 0; i < p.numel(); ++i) {
      if (std::abs(std::abs(p[i] - t[i]) - beta) <= 1e-3) return std::nullopt;
    }
    return Trial{[beta](const std::vector<Tensor>& in) {
                   return smooth_l1_bbox(in[0], in[1], beta);
                 },
                 {p, t}};
  });
}

SuiteResult check_pyramid(const GradcheckOptions& opts, PoolKind pool) {
  const std::string name =
      pool == PoolKind::kL2 ? "pyramid_pool[l2]" : "pyramid_pool[max]";
  return run_suite(name, opts, [pool](Rng& rng) -> std::optional<Trial> {
    const int h = static_cast<int>(uniform_int(rng, 2, 9));
    const int w = static_cast<int>(uniform_int(rng, 2, 9));
    Tensor feat = random_tensor({uniform_int(rng, 1, 2), static_cast<std::size_t>(h),
                                 static_cast<std::size_t>(w)},
                                rng);
    const int x0 = static_cast<int>(uniform_int(rng, 0, w - 1));
    const int y0 = static_cast<int>(uniform_int(rng, 0, h - 1));
    RegionProposal box{x0, y0, static_cast<int>(uniform_int(rng, x0 + 1, w)),
                       static_cast<int>(uniform_int(rng, y0 + 1, h)), std::nullopt};
    PyramidSpec spec;
    spec.pool = pool;
    // Smoothness guard per sub-window.
    const std::size_t c = feat.dim(0);
    for (auto g : spec.levels) {
      for (const auto& by : pyramid_bins(box.height(), g))
        for (const auto& bx : pyramid_bins(box.width(), g))
          for (std::size_t ch = 0; ch < c; ++ch) {
            double sum = 0.0, first = -1e300, second = -1e300;
            int count = 0;
            for (int y = box.y0 + by.begin; y < box.y0 + by.end; ++y)
              for (int x = box.x0 + bx.begin; x < box.x0 + bx.end; ++x) {
                const double v = feat[(ch * h + y) * w + x];
                sum += v * v;
                ++count;
                if (v > first) {
                  second = first;
                  first = v;
                } else if (v > second) {
                  second = v;
                }
              }
            if (pool == PoolKind::kL2 && std::sqrt(sum) < 1e-3) return std::nullopt;
            if (pool == PoolKind::kMax && count > 1 && first - second < 1e-3) {
              return std::nullopt;
            }
          }
    }
    return Trial{[box, spec](const std::vector<Tensor>& in) {
                   return pyramid_pool(FeatureRegion{box, in[0]}, spec);
                 },
                 {feat}};
  });
}

std::vector<SuiteResult> run_gradcheck(const std::string& scope,
                                       const GradcheckOptions& opts) {
  check(scope == "l2" || scope == "layers" || scope == "pyramid" ||
            scope == "all",
        ErrorCode::kBadConfig, "unknown gradcheck scope '" + scope + "'");
  std::vector<SuiteResult> out;
  const bool all = scope == "all";
  if (all || scope == "l2") {
    out.push_back(check_l2_pool(opts));
    out.push_back(check_global_l2_pool(opts));
    out.push_back(check_l2_pool_paper_literal(opts));
  }
  if (all || scope == "layers") {
    out.push_back(check_conv2d(opts));
    out.push_back(check_max_pool(opts));
    out.push_back(check_residual(opts, ResidualVariant::kVanilla));
    out.push_back(check_residual(opts, ResidualVariant::kDense));
    out.push_back(check_dense(opts));
    out.push_back(check_softmax_ce(opts));
    out.push_back(check_hinge(opts));
    out.push_back(check_smooth_l1(opts));
  }
  if (all || scope == "pyramid") {
    out.push_back(check_pyramid(opts, PoolKind::kL2));
    out.push_back(check_pyramid(opts, PoolKind::kMax));
  }
  return out;
}

std::string gradcheck_table(const std::vector<SuiteResult>& results) {
  std::string s;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-26s %-16s %7s %9s %13s\n", "suite", "status", "trials",
                "failures", "max_rel_err");
  s += buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%-26s %-16s %7zu %9zu %13.3e", r.name.c_str(),
                  to_string(r.status).c_str(), r.trials, r.failures, r.max_rel_error);
    s += buf;
    if (r.informational) {
      std::snprintf(buf, sizeof(buf), "  (%zu/%zu disagree > 1e-2, min err %.3g)",
                    r.discrepancies, r.trials, r.min_rel_error);
      s += buf;
    }
    s += "\n";
  }
  return s;
}

std::string gradcheck_to_json(const std::vector<SuiteResult>& results,
                              const GradcheckOptions& opts) {
  nlohmann::ordered_json j;
  j["seed"] = opts.seed;
  j["tolerance"] = opts.tolerance;
  j["trials"] = opts.trials;
  auto suites = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    suites.push_back({{"name", r.name},
                      {"status", to_string(r.status)},
                      {"trials", r.trials},
                      {"failures", r.failures},
                      {"max_rel_error", r.max_rel_error},
                      {"min_rel_error", r.min_rel_error},
                      {"informational", r.informational},
                      {"discrepancies", r.discrepancies}});
  }
  j["suites"] = suites;
  return j.dump(2) + "\n";
}

bool gradcheck_ok(const std::vector<SuiteResult>& results) {
  for (const auto& r : results) {
    if (r.status == CheckStatus::kFail || r.status == CheckStatus::kUnexpectedPass) return false;
  }
  return true;
}

}  // namespace l2net
