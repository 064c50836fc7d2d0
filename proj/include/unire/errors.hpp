// Copyright 2026 The unire Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace unire {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Annotation violates a SentenceAnnotation invariant (overlap, bad index...).
class InvalidAnnotation : public Error {
 public:
  using Error::Error;
};

// Two labels were about to be written into the same table cell.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Caller passed an out-of-domain argument.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared in a forward pass or a loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong order (e.g. backward without forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed or mismatched file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace unire
