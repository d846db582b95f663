/* Copyright 2026 The camrefine Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CAMREFINE_ERRORS_HPP_
#define CAMREFINE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace camrefine {

enum class ErrorCode {
  kDimension,
  kContract,
  kMissingFile,
  kMalformedModel,
  kBackend,
  kSplitDegenerate,
  kMergeCoverage,
  kUndefinedMetric,
  kUndefinedLoss,
  kFormat,
  kCorruptHeader,
  kConfig,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// batch drivers can tell per-entry failures from hard errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace camrefine

#endif  // CAMREFINE_ERRORS_HPP_
