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

#include "l2net/error.hpp"

namespace l2net {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kNonFiniteFunctionValue: return "NonFiniteFunctionValue";
    case ErrorCode::kNotScalarLoss: return "NotScalarLoss";
    case ErrorCode::kDetachedLoss: return "DetachedLoss";
    case ErrorCode::kWindowLargerThanInput: return "WindowLargerThanInput";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyBox: return "EmptyBox";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kUnscoredProposal: return "UnscoredProposal";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kInconsistentDims: return "InconsistentDims";
    case ErrorCode::kMissingModality: return "MissingModality";
    case ErrorCode::kDomainMismatch: return "DomainMismatch";
    case ErrorCode::kDegenerateKappa: return "DegenerateKappa";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kDatasetMissing: return "DatasetMissing";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kCheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::kBadSubset: return "BadSubset";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnscoredDetection: return "UnscoredDetection";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadConfig:
    case ErrorCode::kBadSubset:
    case ErrorCode::kInvalidArgument:
      return 1;
    case ErrorCode::kNonFiniteInput:
    case ErrorCode::kNonFiniteFunctionValue:
    case ErrorCode::kDivergedLoss:
      return 3;
    default:
      return 2;
  }
}

}  // namespace l2net
