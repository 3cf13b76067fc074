/*
 * Copyright 2026 The partdet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace partdet {

/// Base class for every error raised by the library. `kind()` is a short
/// stable token used by the CLI for machine-parsable error lines.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

class InvalidInput : public Error {
public:
  explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

class FormatError : public Error {
public:
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

class UnsupportedVersion : public Error {
public:
  explicit UnsupportedVersion(const std::string& what)
      : Error("unsupported-version", what) {}
};

class NoAssociation : public Error {
public:
  explicit NoAssociation(const std::string& what) : Error("no-association", what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

} // namespace partdet
