#pragma once

#include <stdexcept>
#include <string>

namespace bandframe {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value; the message names the offending field.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A caller broke an operation's precondition (length mismatch, index range).
class ContractViolation : public Error {
public:
  using Error::Error;
};

class EmptyDomainError : public Error {
public:
  using Error::Error;
};

class AssemblyError : public Error {
public:
  using Error::Error;
};

/// Requested spectral band lies beyond the trusted part of the spectrum.
class UnresolvedBandError : public Error {
public:
  using Error::Error;
};

class SolverError : public Error {
public:
  SolverError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

private:
  double best_residual_;
};

class CalibrationError : public Error {
public:
  using Error::Error;
};

class CacheError : public Error {
public:
  using Error::Error;
};

/// Raised by a pipeline stage; carries the stage label.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

} // namespace bandframe
