//
// Copyright (C) 2026 The CME Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cme {

/// Dense real vector; the unit of all view and composition arithmetic.
using Vector = std::vector<double>;

/// A view value for one user. `std::nullopt` is the empty-view sentinel:
/// the user had no in-vocabulary content for that view.
using ViewValue = std::optional<Vector>;

using UserId = std::string;

enum class ClassLabel : std::uint8_t { Personal = 0, InformedAgency = 1, Retail = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses{
    ClassLabel::Personal, ClassLabel::InformedAgency, ClassLabel::Retail};

inline std::size_t class_index(ClassLabel c) { return static_cast<std::size_t>(c); }
inline ClassLabel class_from_index(std::size_t i) { return kAllClasses.at(i); }

/// "P", "I" or "R".
std::string_view class_code(ClassLabel c);
std::string_view class_name(ClassLabel c);
/// Accepts the one-letter codes and the full names, case-insensitively.
std::optional<ClassLabel> parse_class(std::string_view s);

// Errors. Everything thrown by the library derives from cme::Error.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cme
