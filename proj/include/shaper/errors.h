// Copyright 2026 The Shaper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPER_ERRORS_H_
#define SHAPER_ERRORS_H_

#include <stdexcept>
#include <string>

namespace shaper {

// Failure categories. The CLI maps each category onto a process exit code.
enum class ErrorKind {
  kConfig,       // bad configuration or usage
  kValidation,   // value outside its domain (shape not in design space, ...)
  kData,         // empty or malformed input data
  kFormat,       // corrupt or unsupported file contents
  kNumeric,      // NaN/Inf encountered
  kInfeasible,   // no candidate satisfies a constraint
  kState,        // operation invoked on an object in the wrong state
  kContract,     // caller violated a documented precondition
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& m) { return {ErrorKind::kConfig, m}; }
inline Error ValidationError(const std::string& m) {
  return {ErrorKind::kValidation, m};
}
inline Error DataError(const std::string& m) { return {ErrorKind::kData, m}; }
inline Error FormatError(const std::string& m) { return {ErrorKind::kFormat, m}; }
inline Error NumericError(const std::string& m) {
  return {ErrorKind::kNumeric, m};
}
inline Error InfeasibleError(const std::string& m) {
  return {ErrorKind::kInfeasible, m};
}
inline Error StateError(const std::string& m) { return {ErrorKind::kState, m}; }
inline Error ContractError(const std::string& m) {
  return {ErrorKind::kContract, m};
}

}  // namespace shaper

#endif  // SHAPER_ERRORS_H_
