// Copyright 2026 The minpair Authors.
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace minpair {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Grammar source that does not follow the grammar-file syntax.
class GrammarSyntaxError : public Error {
 public:
  GrammarSyntaxError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Structurally valid input that violates a semantic constraint
// (recursive grammar, dangling reference, oversized request, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A target token the scorer cannot assign a probability to.
class OovError : public Error {
 public:
  explicit OovError(std::string token, const std::string& context = {})
      : Error("out-of-vocabulary target '" + token + "'" +
              (context.empty() ? std::string{} : " (" + context + ")")),
        token_(std::move(token)) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

// A minimal-pair record whose compared members do not share a left context.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Scorer session that can no longer be used (child exited, pipe closed).
class SessionError : public Error {
 public:
  using Error::Error;
};

}  // namespace minpair
