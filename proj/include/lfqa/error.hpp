/*
 * lfqa : low-field MRI quality assessment and hippocampus atlas toolkit
 *
 * Copyright 2026 The lfqa Authors
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

#include <stdexcept>
#include <string>

namespace lfqa {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Malformed input file (bad magic, out-of-range score, ...).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Missing, unreadable or unwritable file.
class IoError : public Error {
public:
  using Error::Error;
};

/// Numerical failure: divergence, singular transform, degenerate statistics.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace lfqa
