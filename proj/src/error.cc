// Copyright 2026 The speechverifier Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "speechverifier/error.h"

namespace speechverifier {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
      return "ParseError";
    case ErrorCode::kUnsupportedFormat:
      return "UnsupportedFormat";
    case ErrorCode::kIo:
      return "IoError";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kTooShort:
      return "TooShort";
    case ErrorCode::kInfeasibleEdit:
      return "InfeasibleEdit";
    case ErrorCode::kShape:
      return "ShapeError";
    case ErrorCode::kData:
      return "DataError";
    case ErrorCode::kEmptyInput:
      return "EmptyInput";
    case ErrorCode::kCorpusTooSmall:
      return "CorpusTooSmall";
    case ErrorCode::kConfigMismatch:
      return "ConfigMismatch";
    case ErrorCode::kNonFiniteLoss:
      return "NonFiniteLoss";
  }
  return "Unknown";
}

}  // namespace speechverifier
