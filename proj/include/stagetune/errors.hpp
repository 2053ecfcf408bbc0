/*
 Copyright 2026 The stagetune Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace stagetune {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite state, input or derived quantity.
class NumericDomainError : public Error {
 public:
  using Error::Error;
};

/// Euler-angle kinematics evaluated too close to |pitch| = pi/2.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration. Maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization failed even after jitter escalation.
class GpError : public Error {
 public:
  using Error::Error;
};

}  // namespace stagetune
