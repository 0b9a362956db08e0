#pragma once

#include <stdexcept>
#include <string>

namespace pme {

/// Root of every failure the library reports. Catch this to handle any
/// numerical or contract error uniformly.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Newton-type iteration exhausted its budget. `last_residual` is the norm at exit.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, double last_residual)
      : Error(what), last_residual(last_residual) {}
  double last_residual;
};

class CollapseToZero : public Error {
public:
  using Error::Error;
};

class QuadratureFailure : public Error {
public:
  using Error::Error;
};

class StepFailure : public Error {
public:
  using Error::Error;
};

class NegativityViolation : public Error {
public:
  using Error::Error;
};

class PositivityLoss : public Error {
public:
  using Error::Error;
};

class IterationStall : public Error {
public:
  using Error::Error;
};

class IncompatibleTrajectories : public Error {
public:
  using Error::Error;
};

class DegenerateFit : public Error {
public:
  using Error::Error;
};

class NotConverged : public Error {
public:
  using Error::Error;
};

class WindowTooSmall : public Error {
public:
  using Error::Error;
};

class FitDiverged : public Error {
public:
  using Error::Error;
};

class NoiseDominated : public Error {
public:
  using Error::Error;
};

class ConfigInvalid : public Error {
public:
  using Error::Error;
};

}  // namespace pme
