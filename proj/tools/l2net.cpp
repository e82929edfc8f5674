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

// l2net command-line harness: synthetic data, training, evaluation,
// ablations, gradient checking and artifact schema checks.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "l2net/config.hpp"
#include "l2net/error.hpp"
#include "l2net/experiments.hpp"
#include "l2net/gradcheck.hpp"
#include "l2net/io.hpp"
#include "l2net/kernels.hpp"
#include "l2net/metrics.hpp"
#include "l2net/model.hpp"
#include "l2net/schema.hpp"
#include "l2net/train.hpp"

namespace fs = std::filesystem;
using namespace l2net;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  std::string data;
  bool quiet = false;
};

RunConfig base_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.data.empty()) cfg.data_dir = g.data;
  return cfg;
}

std::string out_dir(const Globals& g, const std::string& fallback) {
  const std::string dir = g.out.empty() ? fallback : g.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  check(!ec, ErrorCode::kIoFailure, "cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

Logger logger(const Globals& g) {
  if (g.quiet) return {};
  return [](const std::string& line) { std::cerr << line << std::endl; };
}

std::string report_name(ReportFormat f, const std::string& stem) {
  return stem + (f == ReportFormat::kJson ? ".json" : ".csv");
}

void print_report(const EvalReport& r) {
  std::printf("accuracy %.4f  sensitivity %.4f  specificity %.4f  recall %.4f  kappa %.4f",
              r.accuracy, r.sensitivity, r.specificity, r.recall, r.kappa);
  if (r.dice) std::printf("  dice %.4f", *r.dice);
  std::printf("  (n=%llu)\n", static_cast<unsigned long long>(r.n_samples));
}

int cmd_synth(const Globals& g, const std::string& task) {
  RunConfig cfg = base_config(g);
  if (!task.empty()) cfg.set("task", task);
  cfg.validate();
  const std::string dir = out_dir(g, cfg.data_dir);
  const Dataset data = make_dataset(cfg);
  write_dataset(dir, data, cfg);
  std::size_t counts[3] = {0, 0, 0};
  const auto names = split_names(cfg.task);
  for (const auto& s : data.split_of) {
    for (std::size_t i = 0; i < names.size(); ++i) counts[i] += s == names[i];
  }
  std::printf("wrote %zu %s volumes to %s (", data.volumes.size(), to_string(cfg.task).c_str(),
              dir.c_str());
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::printf("%s%s %zu", i ? ", " : "", names[i].c_str(), counts[i]);
  }
  std::printf(")\n");
  return 0;
}

int cmd_train_classify(const Globals& g) {
  RunConfig cfg = base_config(g);
  cfg.task = Task::kClassify;
  cfg.validate();
  const auto fmt = report_format_from_string(g.format);
  const Dataset data = load_dataset(cfg.data_dir);
  const std::string dir = out_dir(g, "runs/classify");
  auto res = train_classifier(cfg, data, logger(g));
  save_classifier((fs::path(dir) / "checkpoint").string(), res.net, cfg);
  emit_curve(res.curve, (fs::path(dir) / "curve.csv").string());
  emit_report(res.report, (fs::path(dir) / report_name(fmt, "report")).string(), fmt);
  write_file_atomic((fs::path(dir) / "config.txt").string(), cfg.to_text());
  print_report(res.report);
  return 0;
}

int cmd_train_detect(const Globals& g) {
  RunConfig cfg = base_config(g);
  cfg.task = Task::kDetect;
  cfg.validate();
  const auto fmt = report_format_from_string(g.format);
  const Dataset data = load_dataset(cfg.data_dir);
  const std::string dir = out_dir(g, "runs/detect");
  auto res = train_detector(cfg, data, logger(g));
  save_detector((fs::path(dir) / "checkpoint").string(), res.net, cfg);
  emit_curve(res.curve, (fs::path(dir) / "curve.csv").string());
  write_file_atomic((fs::path(dir) / "steps.csv").string(), steps_csv(res.steps));
  emit_report(res.report, (fs::path(dir) / report_name(fmt, "report")).string(), fmt);
  write_file_atomic((fs::path(dir) / "config.txt").string(), cfg.to_text());
  print_report(res.report);
  return 0;
}

int cmd_eval(const Globals& g, std::string checkpoint, std::string split) {
  RunConfig cli = base_config(g);
  if (checkpoint.empty()) checkpoint = cli.checkpoint;
  check(!checkpoint.empty(), ErrorCode::kBadConfig, "eval needs --checkpoint");
  if (split.empty()) split = cli.eval_split;
  check(split == "train" || split == "val" || split == "test", ErrorCode::kBadConfig,
        "--split must be train, val or test");
  const auto fmt = report_format_from_string(g.format);
  const Checkpoint ck = load_checkpoint(checkpoint);
  RunConfig cfg;
  EvalReport report;
  if (ck.model == "classifier") {
    const Classifier net = load_classifier(ck, &cfg);
    if (!g.data.empty() || !g.config_path.empty()) cfg.data_dir = cli.data_dir;
    const Dataset data = load_dataset(cfg.data_dir);
    check(data.task == Task::kClassify, ErrorCode::kCheckpointMismatch,
          "classifier checkpoint needs a classification dataset");
    report = evaluate_classifier(net, build_slices(data.split(split), cfg, false)).report;
  } else {
    const Detector net = load_detector(ck, &cfg);
    if (!g.data.empty() || !g.config_path.empty()) cfg.data_dir = cli.data_dir;
    const Dataset data = load_dataset(cfg.data_dir);
    check(data.task == Task::kDetect, ErrorCode::kCheckpointMismatch,
          "detector checkpoint needs a detection dataset");
    report = evaluate_detector(net, build_slices(data.split(split), cfg, false), cfg).report;
  }
  if (!g.out.empty()) {
    const std::string dir = out_dir(g, g.out);
    emit_report(report, (fs::path(dir) / report_name(fmt, "eval_report")).string(), fmt);
  }
  print_report(report);
  return 0;
}

int cmd_gradcheck(const Globals& g, const std::string& scope, double tolerance,
                  std::size_t trials) {
  GradcheckOptions opts;
  opts.seed = g.seed.value_or(1);
  opts.tolerance = tolerance;
  opts.trials = trials;
  const auto results = run_gradcheck(scope, opts);
  std::fputs(gradcheck_table(results).c_str(), stdout);
  if (!g.out.empty()) {
    const std::string dir = out_dir(g, g.out);
    write_file_atomic((fs::path(dir) / "gradcheck.json").string(), gradcheck_to_json(results, opts));
  }
  const bool ok = gradcheck_ok(results);
  std::printf("%s\n", ok ? "gradcheck: all suites as expected" : "gradcheck: FAILURES");
  return ok ? 0 : 3;
}

int cmd_ablate_modality(const Globals& g, const std::string& subsets) {
  RunConfig cfg = base_config(g);
  cfg.task = Task::kDetect;
  if (!subsets.empty()) cfg.set("ablation_subsets", subsets);
  cfg.validate();
  const Dataset data = load_dataset(cfg.data_dir);
  const std::string dir = out_dir(g, "runs/ablate-modality");
  const auto rows = run_modality_ablation(cfg, data, logger(g));
  const std::string csv = modality_ablation_csv(rows, ablation_columns(cfg.ablation_subsets));
  write_file_atomic((fs::path(dir) / "ablation_modality.csv").string(), csv);
  write_file_atomic((fs::path(dir) / "config.txt").string(), cfg.to_text());
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_ablate_pooling(const Globals& g) {
  RunConfig cfg = base_config(g);
  cfg.task = Task::kDetect;
  cfg.validate();
  const Dataset data = load_dataset(cfg.data_dir);
  const std::string dir = out_dir(g, "runs/ablate-pooling");
  const std::string csv = pooling_ablation_csv(run_pooling_ablation(cfg, data, logger(g)));
  write_file_atomic((fs::path(dir) / "ablation_pooling.csv").string(), csv);
  write_file_atomic((fs::path(dir) / "config.txt").string(), cfg.to_text());
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_schema_check(const Globals& g, std::string path) {
  if (path.empty()) path = g.out.empty() ? "." : g.out;
  const auto results = schema_check(path);
  std::size_t bad = 0;
  for (const auto& r : results) {
    std::printf("%-4s %-22s %s%s%s\n", r.ok ? "ok" : "FAIL", r.kind.c_str(), r.path.c_str(),
                r.ok ? "" : ": ", r.message.c_str());
    bad += !r.ok;
  }
  std::printf("%zu artifacts checked, %zu failed\n", results.size(), bad);
  return bad == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l2net: l2-norm pooling networks for multi-modal MRI slices"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Flat key = value config file");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--data", g.data, "Dataset directory (overrides data_dir)");
  app.add_flag("--quiet", g.quiet, "Suppress per-epoch progress on stderr");
  bool serial = false;
  app.add_flag("--serial", serial, "Use the serial reference kernels");

  std::string task, checkpoint, split, scope = "all", subsets, path;
  double tolerance = 1e-4;
  std::size_t trials = 100;

  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  synth->add_option("--task", task, "classify or detect (overrides config)");
  auto* tc = app.add_subcommand("train-classify", "Train the slice classifier");
  auto* td = app.add_subcommand("train-detect", "Train the lesion detector");
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint directory");
  ev->add_option("--split", split, "train, val or test");
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc->add_option("--scope", scope, "l2, layers, pyramid or all");
  gc->add_option("--tolerance", tolerance, "Relative error tolerance");
  gc->add_option("--trials", trials, "Random inputs per suite");
  auto* am = app.add_subcommand("ablate-modality", "Detection Dice per modality subset");
  am->add_option("--subsets", subsets, "e.g. \"T1;T1,T1c,T2,FLAIR\"");
  auto* ap = app.add_subcommand("ablate-pooling", "Detection with l2 vs max pooling");
  auto* sc = app.add_subcommand("schema-check", "Validate emitted artifacts");
  sc->add_option("path", path, "File or directory (default: --out or .)");
  for (auto* sub : {synth, tc, td, ev, gc, am, ap, sc}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (serial) kernels::set_parallel(false);
    const auto t0 = std::chrono::steady_clock::now();
    int rc = 0;
    if (*synth) rc = cmd_synth(g, task);
    else if (*tc) rc = cmd_train_classify(g);
    else if (*td) rc = cmd_train_detect(g);
    else if (*ev) rc = cmd_eval(g, checkpoint, split);
    else if (*gc) rc = cmd_gradcheck(g, scope, tolerance, trials);
    else if (*am) rc = cmd_ablate_modality(g, subsets);
    else if (*ap) rc = cmd_ablate_pooling(g);
    else if (*sc) rc = cmd_schema_check(g, path);
    if (!g.quiet) {
      std::cerr << "elapsed "
                << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                << " s" << std::endl;
    }
    return rc;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
