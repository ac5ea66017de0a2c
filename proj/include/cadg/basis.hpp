#pragma once

#include <vector>

namespace cadg {

/// Nodal Lagrange basis on Gauss-Legendre points of the unit interval (0, 1).
///
/// All d-dimensional operators are tensor products of these 1-D tables.
struct Basis1D {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
  /// Row-major (p+1)^2, diff[i*(p+1)+j] = phi_j'(x_i).
  std::vector<double> diff;
  /// phi_j(0) and phi_j(1).
  std::vector<double> left;
  std::vector<double> right;

  int size() const { return order + 1; }
  double d(int i, int j) const { return diff[static_cast<std::size_t>(i * (order + 1) + j)]; }

  /// phi_j(x) for all j.
  std::vector<double> evaluate(double x) const;
  /// sum_j coeffs[j] * phi_j(x).
  double interpolate(const std::vector<double>& coeffs, double x) const;
};

constexpr int kMaxOrder = 9;

/// Gauss-Legendre nodes/weights mapped to (0,1). Throws ConfigError for p outside [0, 9].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gaussLegendre(int p);

/// Full basis (nodes, weights, differentiation matrix, extrapolation vectors).
Basis1D makeBasis(int p);

/// D[i][j] = phi_j'(x_i), row-major.
std::vector<double> derivativeMatrix(const std::vector<double>& nodes);

struct ExtrapolationVectors {
  std::vector<double> left;
  std::vector<double> right;
};
ExtrapolationVectors extrapolationVectors(const Basis1D& basis);

/// Weights that collapse nodal values in time onto the integral over the unit time
/// interval; scaled by the step size downstream.
std::vector<double> timeCollapseWeights(const Basis1D& basis);

}  // namespace cadg
