#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cadg {

/// Invalid run configuration or out-of-range construction parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state outside the domain of a physical formula (e.g. negative density).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Violation of the STP -> Riemann -> Corrector ordering. Always a scheduler bug.
class SchedulingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// API misuse, e.g. claiming a face outside of an active sweep.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Refusal to allocate a grid above the configured memory budget.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, std::size_t requestedBytes)
      : std::runtime_error(what), requestedBytes_(requestedBytes) {}
  std::size_t requestedBytes() const { return requestedBytes_; }

 private:
  std::size_t requestedBytes_;
};

/// The space-time predictor produced NaN/Inf.
class PredictorFailure : public std::runtime_error {
 public:
  PredictorFailure(const std::string& what, int cell)
      : std::runtime_error(what), cell_(cell) {}
  int cell() const { return cell_; }

 private:
  int cell_;
};

/// Unrecoverable numerical state during a run (carries the realisation step).
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace cadg

namespace cadg {

/// A finite-volume step larger than the patch CFL limit.
class CflViolation : public std::runtime_error {
 public:
  CflViolation(const std::string& what, double maxDt) : std::runtime_error(what), maxDt_(maxDt) {}
  double maxDt() const { return maxDt_; }

 private:
  double maxDt_;
};

}  // namespace cadg
