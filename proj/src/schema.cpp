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

#include "l2net/schema.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "l2net/config.hpp"
#include "l2net/error.hpp"
#include "l2net/experiments.hpp"
#include "l2net/io.hpp"
#include "l2net/metrics.hpp"
#include "l2net/model.hpp"
#include "l2net/train.hpp"
#include "l2net/volume.hpp"

namespace l2net {

namespace fs = std::filesystem;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

void check_report_json(const std::string& text) {
  const auto j = nlohmann::ordered_json::parse(text);
  const std::vector<std::string> keys{"accuracy", "sensitivity", "specificity", "recall",
                                      "kappa", "dice", "n_samples", "kappa_degenerate",
                                      "per_class", "confusion"};
  std::vector<std::string> got;
  for (auto it = j.begin(); it != j.end(); ++it) got.push_back(it.key());
  require(got == keys, "report keys or key order differ from the schema");
  const EvalReport r = report_from_json(text);
  for (double v : {r.accuracy, r.sensitivity, r.specificity, r.recall}) {
    require(v >= 0.0 && v <= 1.0, "rate outside [0,1]");
  }
  require(r.kappa >= -1.0 && r.kappa <= 1.0, "kappa outside [-1,1]");
  if (r.dice) require(*r.dice >= 0.0 && *r.dice <= 1.0, "dice outside [0,1]");
  require(report_to_json(r) == text, "report does not round-trip bit-exactly");
}

void check_report_csv(const std::string& text) {
  const auto ls = lines_of(text);
  require(ls.size() == 2, "report CSV must have a header and one row");
  require(ls[0] == "accuracy,sensitivity,specificity,recall,kappa,dice,n_samples",
          "report CSV header mismatch");
  require(csv_fields(ls[1]).size() == 7, "report CSV row must have 7 fields");
}

void check_curve(const std::string& text) {
  const auto curve = curve_from_csv(text);
  require(curve_to_csv(curve) == text, "curve does not round-trip bit-exactly");
}

void check_steps(const std::string& text) {
  const auto ls = lines_of(text);
  require(!ls.empty() && ls[0] == "step,cls_loss,bbox_loss,total", "steps CSV header mismatch");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = csv_fields(ls[i]);
    require(f.size() == 4, "steps row must have 4 fields");
    const double cls = std::stod(f[1]), bbox = std::stod(f[2]), total = std::stod(f[3]);
    require(cls + bbox == total, "total != cls + bbox at step " + f[0]);
  }
}

void check_splits(const std::string& text) {
  const auto ls = lines_of(text);
  require(!ls.empty() && ls[0] == "volume_id,label,split", "splits CSV header mismatch");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = csv_fields(ls[i]);
    require(f.size() == 3, "splits row must have 3 fields");
    require(f[2] == "train" || f[2] == "val" || f[2] == "test", "unknown split " + f[2]);
  }
}

void check_modality_ablation(const std::string& text) {
  const auto ls = lines_of(text);
  require(ls.size() >= 2, "modality ablation needs at least one row");
  const auto header = csv_fields(ls[0]);
  require(header.size() >= 2 && header.back() == "dice", "header must end with dice");
  for (std::size_t c = 0; c + 1 < header.size(); ++c) {
    require(is_modality(header[c]), "unknown modality column " + header[c]);
  }
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = csv_fields(ls[i]);
    require(f.size() == header.size(), "row width differs from header");
    for (std::size_t c = 0; c + 1 < f.size(); ++c) require(f[c] == "x" || f[c] == "-", "flag must be x or -");
    const double d = std::stod(f.back());
    require(d >= 0.0 && d <= 1.0, "dice outside [0,1]");
  }
}

void check_pooling_ablation(const std::string& text) {
  const auto ls = lines_of(text);
  require(ls.size() == 3, "pooling ablation must have exactly two rows");
  require(ls[0] == "method,pooling,dice,accuracy,kappa", "pooling ablation header mismatch");
  require(csv_fields(ls[1])[1] == "l2" && csv_fields(ls[2])[1] == "max",
          "rows must be l2 then max");
}

void check_gradcheck(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  for (const char* k : {"seed", "tolerance", "trials", "suites"}) {
    require(j.contains(k), std::string("gradcheck JSON lacks ") + k);
  }
  const std::set<std::string> statuses{"PASS", "FAIL", "EXPECTED FAIL", "UNEXPECTED PASS"};
  for (const auto& s : j.at("suites")) {
    require(statuses.count(s.at("status").get<std::string>()) == 1, "unknown suite status");
  }
}

void check_config(const std::string& text) {
  const RunConfig c = parse_config(text);
  require(c.to_text() == text, "config does not round-trip");
}

}  // namespace

SchemaResult check_artifact(const std::string& path) {
  const fs::path p(path);
  const std::string name = p.filename().string();
  SchemaResult r{path, "unknown", true, ""};
  try {
    if (fs::is_directory(p)) {
      if (!fs::exists(p / "manifest.txt")) return r;
      r.kind = "checkpoint";
      load_checkpoint(path);
      return r;
    }
    if (name.size() > 4 && name.ends_with(".tmp")) {
      r.kind = "partial-write";
      require(false, "leftover temporary file from an interrupted write");
    }
    const std::string ext = p.extension().string();
    if (ext == ".mvol") {
      r.kind = "mvol";
      const auto vol = load_volume(path);
      const auto bytes = encode_volume(vol);
      require(std::string(bytes.begin(), bytes.end()) == read_file(path),
              "volume does not round-trip bit-exactly");
      return r;
    }
    if (fs::exists(p.parent_path() / "manifest.txt") && ext == ".txt" && name != "manifest.txt" &&
        name != "config.txt") {
      r.kind = "checkpoint-param";  // validated with its checkpoint directory
      return r;
    }
    if (name == "manifest.txt") return r;
    const std::string text = read_file(path);
    if (name == "manifest.json") {
      r.kind = "dataset-manifest";
      load_dataset(p.parent_path().string());
    } else if (name == "splits.csv") {
      r.kind = "splits-csv";
      check_splits(text);
    } else if (name == "curve.csv") {
      r.kind = "curve-csv";
      check_curve(text);
    } else if (name == "steps.csv") {
      r.kind = "steps-csv";
      check_steps(text);
    } else if (name == "ablation_modality.csv") {
      r.kind = "modality-ablation-csv";
      check_modality_ablation(text);
    } else if (name == "ablation_pooling.csv") {
      r.kind = "pooling-ablation-csv";
      check_pooling_ablation(text);
    } else if (name == "gradcheck.json") {
      r.kind = "gradcheck-json";
      check_gradcheck(text);
    } else if (name == "config.txt") {
      r.kind = "config";
      check_config(text);
    } else if (ext == ".json" && name.find("report") != std::string::npos) {
      r.kind = "report-json";
      check_report_json(text);
    } else if (ext == ".csv" && name.find("report") != std::string::npos) {
      r.kind = "report-csv";
      check_report_csv(text);
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.message = e.what();
  }
  return r;
}

std::vector<SchemaResult> schema_check(const std::string& root) {
  check(fs::exists(root), ErrorCode::kIoFailure, "no such path: " + root);
  std::vector<std::string> paths;
  if (fs::is_directory(root)) {
    paths.push_back(root);
    for (const auto& e : fs::recursive_directory_iterator(root)) paths.push_back(e.path().string());
  } else {
    paths.push_back(root);
  }
  std::sort(paths.begin(), paths.end());
  std::vector<SchemaResult> out;
  for (const auto& p : paths) {
    auto r = check_artifact(p);
    if (r.kind != "unknown") out.push_back(std::move(r));
  }
  return out;
}

}  // namespace l2net
