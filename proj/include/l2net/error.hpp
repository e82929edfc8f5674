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

#include <stdexcept>
#include <string>
#include <string_view>

namespace l2net {

enum class ErrorCode {
  kShapeMismatch,
  kNonFiniteInput,
  kNonFiniteFunctionValue,
  kNotScalarLoss,
  kDetachedLoss,
  kWindowLargerThanInput,
  kLabelOutOfRange,
  kEmptyBox,
  kImageTooSmall,
  kUnscoredProposal,
  kBadMagic,
  kTruncatedFile,
  kInconsistentDims,
  kMissingModality,
  kDomainMismatch,
  kDegenerateKappa,
  kIoFailure,
  kBadConfig,
  kDatasetMissing,
  kDivergedLoss,
  kCheckpointMismatch,
  kBadSubset,
  kInvalidArgument,
  kUnscoredDetection,
  kChecksumMismatch,
};

std::string_view to_string(ErrorCode code);

// Process exit status for a failure: 1 usage, 2 data, 3 numerical.
int exit_code(ErrorCode code);

// All library failures are reported through this type; `code()` is the
// stable, testable part, `what()` carries a human readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void check(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace l2net
