/*
 * Copyright (c) 2026, the faultforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <utility>

namespace faultforge {

enum class ErrorCode {
  kOk,
  kInvalidArgument,
  kOutOfRange,
  kNotFound,
  kAlreadyExists,
  kPermissionDenied,
  kIoError,
  kNoSpace,
  kNoMemory,
  kTimedOut,
  kDeviceError,
  kCorruption,
  kAborted,
};

const char* error_code_name(ErrorCode code);

// Value-type status. Operations whose failures are data (config writes,
// parses, store ops, injected errors) return these instead of throwing.
// `err_no` carries a negative errno-style value when one applies, e.g. the
// retval of an errno-typed injected function.
class Status {
 public:
  Status() = default;

  static Status ok() { return Status(); }
  static Status error(ErrorCode code, std::string message) {
    Status s;
    s.code_ = code;
    s.message_ = std::move(message);
    return s;
  }
  static Status with_errno(ErrorCode code, std::string message, int err_no) {
    Status s = error(code, std::move(message));
    s.err_no_ = err_no;
    return s;
  }

  bool is_ok() const { return code_ == ErrorCode::kOk; }
  ErrorCode code() const { return code_; }
  const std::string& message() const { return message_; }
  int err_no() const { return err_no_; }

  std::string to_string() const;

 private:
  ErrorCode code_ = ErrorCode::kOk;
  std::string message_;
  int err_no_ = 0;
};

template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Result(Status status) : status_(std::move(status)) {  // NOLINT(google-explicit-constructor)
    assert(!status_.is_ok());
  }

  bool is_ok() const { return status_.is_ok(); }
  const Status& status() const { return status_; }

  T& value() {
    assert(is_ok());
    return *value_;
  }
  const T& value() const {
    assert(is_ok());
    return *value_;
  }
  T take() {
    assert(is_ok());
    return std::move(*value_);
  }

 private:
  Status status_;
  std::optional<T> value_;
};

}  // namespace faultforge
