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

#include <string>
#include <vector>

namespace l2net {

struct SchemaResult {
  std::string path;
  std::string kind;  // "report-json", "curve-csv", "checkpoint", ...
  bool ok = true;
  std::string message;
};

// Validates one artifact file (or checkpoint directory) against its
// documented schema. Unknown file names yield kind "unknown" and ok = true.
SchemaResult check_artifact(const std::string& path);

// Recursively checks every artifact under `root`; leftover ".tmp" files
// from interrupted writes are reported as failures.
std::vector<SchemaResult> schema_check(const std::string& root);

}  // namespace l2net
