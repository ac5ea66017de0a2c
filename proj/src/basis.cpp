#include "cadg/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cadg/errors.hpp"

namespace cadg {

namespace {

// Legendre P_n and its derivative at xi in [-1, 1].
std::pair<double, double> legendre(int n, double xi) {
  double p0 = 1.0;
  double p1 = xi;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
  return {p1, dp};
}

std::vector<double> lagrangeAt(const std::vector<double>& nodes, double x) {
  const std::size_t n = nodes.size();
  std::vector<double> phi(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) phi[j] *= (x - nodes[k]) / (nodes[j] - nodes[k]);
    }
  }
  return phi;
}

}  // namespace

QuadratureRule gaussLegendre(int p) {
  if (p < 0 || p > kMaxOrder) {
    throw ConfigError("polynomial order p=" + std::to_string(p) + " outside valid range [0, " +
                      std::to_string(kMaxOrder) + "]");
  }
  const int n = p + 1;
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    double xi = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    if (n == 1) xi = 0.0;
    for (int it = 0; it < 100; ++it) {
      auto [pn, dpn] = legendre(n, xi);
      const double step = pn / dpn;
      xi -= step;
      if (std::abs(step) < 1e-15) break;
    }
    const double dpn = n == 1 ? 1.0 : legendre(n, xi).second;
    const double w = 2.0 / ((1.0 - xi * xi) * dpn * dpn);
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 + xi);
    rule.weights[static_cast<std::size_t>(i)] = 0.5 * w;
  }
  // The initial guesses run from +1 down to -1.
  std::reverse(rule.nodes.begin(), rule.nodes.end());
  std::reverse(rule.weights.begin(), rule.weights.end());
  // Symmetrise about 0.5 so mirrored nodes agree to the last bit.
  for (int i = 0; i < n / 2; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(n - 1 - i);
    const double half = 0.5 * ((0.5 - rule.nodes[a]) + (rule.nodes[b] - 0.5));
    rule.nodes[a] = 0.5 - half;
    rule.nodes[b] = 0.5 + half;
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.weights[a] = w;
    rule.weights[b] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.5;
  return rule;
}

std::vector<double> derivativeMatrix(const std::vector<double>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> bary(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) bary[j] /= (nodes[j] - nodes[k]);
    }
  }
  std::vector<double> diff(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double rowSum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
      diff[i * n + j] = v;
      rowSum += v;
    }
    diff[i * n + i] = -rowSum;
  }
  return diff;
}

Basis1D makeBasis(int p) {
  QuadratureRule rule = gaussLegendre(p);
  Basis1D basis;
  basis.order = p;
  basis.nodes = std::move(rule.nodes);
  basis.weights = std::move(rule.weights);
  basis.diff = derivativeMatrix(basis.nodes);
  basis.left = lagrangeAt(basis.nodes, 0.0);
  basis.right = lagrangeAt(basis.nodes, 1.0);
  return basis;
}

std::vector<double> Basis1D::evaluate(double x) const { return lagrangeAt(nodes, x); }

double Basis1D::interpolate(const std::vector<double>& coeffs, double x) const {
  const auto phi = evaluate(x);
  double sum = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) sum += coeffs[j] * phi[j];
  return sum;
}

ExtrapolationVectors extrapolationVectors(const Basis1D& basis) { return {basis.left, basis.right}; }

std::vector<double> timeCollapseWeights(const Basis1D& basis) { return basis.weights; }

}  // namespace cadg
