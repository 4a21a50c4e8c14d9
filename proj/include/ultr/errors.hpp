/*
 * Copyright 2026 The ultr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef ULTR_ERRORS_HPP_
#define ULTR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ultr {

/*! \brief Error categories, mirrored one-to-one by the C API status codes. */
enum class ErrorCode : int {
  kOk = 0,
  kValidation = 1,        // bad argument, domain violation, integrity failure
  kParse = 2,             // malformed input file
  kIo = 3,                // file missing / unreadable / unwritable
  kState = 4,             // required field absent (clicks, relevance, ...)
  kConfig = 5,            // inconsistent or incomplete configuration
  kInsufficientData = 6,  // estimator guard tripped
  kDegenerate = 7,        // statistic undefined on this input
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorCode::kValidation, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorCode::kParse, w) {}
  ParseError(const std::string& file, long line, const std::string& w)
      : Error(ErrorCode::kParse, file + ":" + std::to_string(line) + ": " + w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::kIo, w) {}
};
struct StateError : Error {
  explicit StateError(const std::string& w) : Error(ErrorCode::kState, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCode::kConfig, w) {}
};
struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& w)
      : Error(ErrorCode::kInsufficientData, w) {}
};
struct DegenerateError : Error {
  explicit DegenerateError(const std::string& w) : Error(ErrorCode::kDegenerate, w) {}
};

}  // namespace ultr

#endif  // ULTR_ERRORS_HPP_
