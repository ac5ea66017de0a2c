#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace cadg {

/// Conserved state at one point. Euler ordering: rho, j_1..j_d, E.
using StateVector = std::vector<double>;

/// d x m flux tensor; row i is the flux along coordinate direction i.
struct FluxTensor {
  int dims = 0;
  int components = 0;
  std::vector<double> entries;

  double operator()(int axis, int component) const {
    return entries[static_cast<std::size_t>(axis * components + component)];
  }
  std::span<const double> row(int axis) const {
    return std::span<const double>(entries).subspan(static_cast<std::size_t>(axis * components),
                                                    static_cast<std::size_t>(components));
  }
};

/// Hyperbolic system dQ/dt + div F(Q) = 0.
///
/// The raw `flux` and `maxSignalSpeed` members do not check admissibility;
/// they are the hot path of the kernels. The free functions below are the
/// checked entry points.
class PdeSystem {
 public:
  virtual ~PdeSystem() = default;

  virtual int dimensions() const = 0;
  virtual int components() const = 0;

  /// Flux along `axis`, written to `out` (length m).
  virtual void flux(std::span<const double> q, int axis, std::span<double> out) const = 0;
  /// Largest absolute eigenvalue of the flux Jacobian along `axis`.
  virtual double maxSignalSpeed(std::span<const double> q, int axis) const = 0;
  virtual bool isAdmissible(std::span<const double> q) const = 0;

  /// Analytic solution when one is known for the loaded initial data.
  virtual std::optional<StateVector> exactSolution(std::span<const double> x, double t) const {
    (void)x;
    (void)t;
    return std::nullopt;
  }
};

constexpr double kGamma = 1.4;
constexpr double kAdmissibilityEpsilon = 1e-12;

/// Compressible Euler equations, m = d + 2, gamma = 1.4.
class EulerSystem final : public PdeSystem {
 public:
  explicit EulerSystem(int dims);

  int dimensions() const override { return dims_; }
  int components() const override { return dims_ + 2; }
  void flux(std::span<const double> q, int axis, std::span<double> out) const override;
  double maxSignalSpeed(std::span<const double> q, int axis) const override;
  bool isAdmissible(std::span<const double> q) const override;

 private:
  int dims_;
};

/// Scalar linear advection dq/dt + a . grad q = 0 with optional exact solution
/// for periodic initial data on the unit cube.
class AdvectionSystem final : public PdeSystem {
 public:
  using Profile = std::function<double(std::span<const double>)>;

  AdvectionSystem(std::vector<double> velocity, Profile initial = {});

  int dimensions() const override { return static_cast<int>(velocity_.size()); }
  int components() const override { return 1; }
  void flux(std::span<const double> q, int axis, std::span<double> out) const override;
  double maxSignalSpeed(std::span<const double> q, int axis) const override;
  bool isAdmissible(std::span<const double> q) const override;
  std::optional<StateVector> exactSolution(std::span<const double> x, double t) const override;

  const std::vector<double>& velocity() const { return velocity_; }

 private:
  std::vector<double> velocity_;
  Profile initial_;
};

/// p = 0.4 (E - j.j / (2 rho)). Throws DomainError for rho <= 0.
double eulerPressure(std::span<const double> q);

/// Full flux tensor of an admissible Euler state. Throws DomainError otherwise.
FluxTensor eulerFlux(std::span<const double> q);

/// Checked signal speed; `normal` must be an axis-aligned unit vector.
double maxSignalSpeed(const PdeSystem& pde, std::span<const double> q, std::span<const double> normal);

bool isAdmissible(const PdeSystem& pde, std::span<const double> q);

std::unique_ptr<PdeSystem> makeEuler(int dims);

}  // namespace cadg
