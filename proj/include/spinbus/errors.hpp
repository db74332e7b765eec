/* Copyright 2026 The spinbus Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace spinbus {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Position or parameter outside the valid domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, singular reconstructions, broken invariants.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// File parsed but its contents are malformed or of an unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace spinbus
