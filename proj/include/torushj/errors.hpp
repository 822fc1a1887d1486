#pragma once

#include <stdexcept>
#include <string>

namespace torushj {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 2D cross term violates diagonal dominance, so no monotone 7-point stencil exists.
class StencilNotMonotone : public Error {
 public:
  using Error::Error;
};

/// No growth constant L below the bisection cap satisfies the superlinear
/// growth inequality on the sampled set.
class NoFiniteL : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Successive vanishing-discount iterates stopped contracting.
class NonCauchy : public Error {
 public:
  using Error::Error;
};

class LinearSolveFailure : public Error {
 public:
  using Error::Error;
};

class NotCertifiable : public Error {
 public:
  using Error::Error;
};

class TooManyPairs : public Error {
 public:
  using Error::Error;
};

class NonPositiveEigenvector : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace torushj
