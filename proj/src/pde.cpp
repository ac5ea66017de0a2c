#include "cadg/pde.hpp"

#include <cmath>
#include <string>

#include "cadg/errors.hpp"

namespace cadg {

namespace {

double momentumSquared(std::span<const double> q, int dims) {
  double jj = 0.0;
  for (int i = 1; i <= dims; ++i) jj += q[i] * q[i];
  return jj;
}

double rawPressure(std::span<const double> q, int dims) {
  return (kGamma - 1.0) * (q[dims + 1] - 0.5 * momentumSquared(q, dims) / q[0]);
}

int eulerDims(std::span<const double> q) {
  const int dims = static_cast<int>(q.size()) - 2;
  if (dims < 1 || dims > 3) {
    throw DomainError("Euler state must have 3..5 components, got " + std::to_string(q.size()));
  }
  return dims;
}

}  // namespace

EulerSystem::EulerSystem(int dims) : dims_(dims) {
  if (dims < 1 || dims > 3) throw ConfigError("Euler system supports 1..3 dimensions");
}

void EulerSystem::flux(std::span<const double> q, int axis, std::span<double> out) const {
  const double rho = q[0];
  const double p = rawPressure(q, dims_);
  const double ja = q[1 + axis];
  const double ua = ja / rho;
  out[0] = ja;
  for (int i = 0; i < dims_; ++i) out[1 + i] = ua * q[1 + i];
  out[1 + axis] += p;
  out[dims_ + 1] = ua * (q[dims_ + 1] + p);
}

double EulerSystem::maxSignalSpeed(std::span<const double> q, int axis) const {
  const double rho = q[0];
  const double p = rawPressure(q, dims_);
  return std::abs(q[1 + axis] / rho) + std::sqrt(kGamma * p / rho);
}

bool EulerSystem::isAdmissible(std::span<const double> q) const {
  for (double v : q) {
    if (!std::isfinite(v)) return false;
  }
  if (!(q[0] > kAdmissibilityEpsilon)) return false;
  return rawPressure(q, dims_) > kAdmissibilityEpsilon;
}

AdvectionSystem::AdvectionSystem(std::vector<double> velocity, Profile initial)
    : velocity_(std::move(velocity)), initial_(std::move(initial)) {
  if (velocity_.empty() || velocity_.size() > 3) {
    throw ConfigError("advection velocity must have 1..3 entries");
  }
}

void AdvectionSystem::flux(std::span<const double> q, int axis, std::span<double> out) const {
  out[0] = velocity_[static_cast<std::size_t>(axis)] * q[0];
}

double AdvectionSystem::maxSignalSpeed(std::span<const double>, int axis) const {
  return std::abs(velocity_[static_cast<std::size_t>(axis)]);
}

bool AdvectionSystem::isAdmissible(std::span<const double> q) const { return std::isfinite(q[0]); }

std::optional<StateVector> AdvectionSystem::exactSolution(std::span<const double> x, double t) const {
  if (!initial_) return std::nullopt;
  std::vector<double> origin(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double shifted = x[i] - velocity_[i] * t;
    origin[i] = shifted - std::floor(shifted);
  }
  return StateVector{initial_(origin)};
}

double eulerPressure(std::span<const double> q) {
  const int dims = eulerDims(q);
  if (!(q[0] > 0.0)) throw DomainError("eulerPressure: non-positive density");
  return rawPressure(q, dims);
}

FluxTensor eulerFlux(std::span<const double> q) {
  const int dims = eulerDims(q);
  EulerSystem euler(dims);
  if (!euler.isAdmissible(q)) throw DomainError("eulerFlux: inadmissible state");
  FluxTensor f{dims, dims + 2, std::vector<double>(static_cast<std::size_t>(dims * (dims + 2)))};
  for (int a = 0; a < dims; ++a) {
    euler.flux(q, a, std::span<double>(f.entries).subspan(static_cast<std::size_t>(a * (dims + 2)),
                                                          static_cast<std::size_t>(dims + 2)));
  }
  return f;
}

double maxSignalSpeed(const PdeSystem& pde, std::span<const double> q, std::span<const double> normal) {
  if (static_cast<int>(normal.size()) != pde.dimensions()) {
    throw DomainError("maxSignalSpeed: normal has wrong dimension");
  }
  int axis = -1;
  for (int i = 0; i < pde.dimensions(); ++i) {
    const double n = normal[static_cast<std::size_t>(i)];
    if (std::abs(n) == 1.0 && axis < 0) {
      axis = i;
    } else if (n != 0.0) {
      throw DomainError("maxSignalSpeed: normal must be an axis-aligned unit vector");
    }
  }
  if (axis < 0) throw DomainError("maxSignalSpeed: zero normal");
  if (!pde.isAdmissible(q)) throw DomainError("maxSignalSpeed: inadmissible state");
  return pde.maxSignalSpeed(q, axis);
}

bool isAdmissible(const PdeSystem& pde, std::span<const double> q) {
  if (static_cast<int>(q.size()) != pde.components()) return false;
  return pde.isAdmissible(q);
}

std::unique_ptr<PdeSystem> makeEuler(int dims) { return std::make_unique<EulerSystem>(dims); }

}  // namespace cadg
