// Copyright 2026 The flowlearn Authors.
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

namespace flowlearn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the domain or inside an obstacle.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument violates a documented precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// The rig could not resolve a flow vector (fewer than two lit sensors).
class FlowUndetectableError : public Error {
 public:
  using Error::Error;
};

/// Two sensors with parallel axes were used for reconstruction.
class SingularGeometryError : public Error {
 public:
  using Error::Error;
};

/// A series carries no variance, so its autocorrelation is undefined.
class DegenerateSeriesError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

/// Two measurements share a location; the Kronecker noise term is ill-posed.
class DuplicateLocationError : public Error {
 public:
  using Error::Error;
};

/// A covariance factorization failed even after jitter.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, std::size_t first,
                      std::size_t second)
      : Error(what), first_(first), second_(second) {}

  /// Indices of the offending pair in the measurement set.
  std::size_t first() const { return first_; }
  std::size_t second() const { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

/// No candidate is reachable, even after relaxing the travel constraint.
class IsolatedRobotError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. Carries the 1-based line when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace flowlearn
