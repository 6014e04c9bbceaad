// Copyright 2026 The nspiggy Authors.
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

#ifndef NSPIGGY_ERROR_HPP
#define NSPIGGY_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nspiggy {

enum class ErrorKind {
  EmptySet,
  DimensionMismatch,
  InvalidArgument,
  RateViolation,
  RateCertification,
  SetExplosion,
  Divergence,
  TangentBlowUp,
  ImplicitInapplicable,
  Decomposition,
  InnerSolve,
  Io,
};

const char* to_string(ErrorKind kind);

/// Numerical or contract failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nspiggy

#endif  // NSPIGGY_ERROR_HPP
