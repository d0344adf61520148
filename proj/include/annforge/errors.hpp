// Copyright 2026-present the annforge project
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

#include <stdexcept>
#include <string>

namespace annforge {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller passed an invalid value (bad k, dimension mismatch, ...).
struct ArgumentError : Error {
  using Error::Error;
};

/// An operation was invoked on an object in the wrong state
/// (e.g. mutating a frozen index, searching an unfrozen one).
struct StateError : Error {
  using Error::Error;
};

/// An input file does not conform to its declared format.
struct FormatError : Error {
  using Error::Error;
};

/// A structured text response could not be parsed.
struct ParseError : Error {
  using Error::Error;
};

/// Filesystem I/O failed; the message names the path.
struct IoError : Error {
  using Error::Error;
};

}  // namespace annforge
