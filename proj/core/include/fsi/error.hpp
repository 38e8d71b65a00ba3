#pragma once

#include <stdexcept>
#include <string>

namespace fsi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StencilUnderflowError : public Error {
 public:
  using Error::Error;
};

class DegenerateJacobianError : public Error {
 public:
  using Error::Error;
};

class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

class InfiniteEnergyError : public Error {
 public:
  using Error::Error;
};

class CflViolationError : public Error {
 public:
  using Error::Error;
};

class LinearSolverError : public Error {
 public:
  using Error::Error;
};

class PullInFailureError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsi
