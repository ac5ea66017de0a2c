#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "cadg/errors.hpp"
#include "cadg/kernels.hpp"
#include "support.hpp"

using namespace cadg;

namespace {

std::vector<double> constantBlock(const Operators& ops, const std::vector<double>& q) {
  std::vector<double> out(ops.cellBlock);
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = q[e % q.size()];
  return out;
}

struct Hull {
  std::vector<std::vector<double>> q, f;
  std::vector<HullTarget> targets;
  explicit Hull(const Operators& ops) : q(2 * ops.dims), f(2 * ops.dims) {
    for (int s = 0; s < 2 * ops.dims; ++s) {
      q[s].assign(ops.cellBlock, 0.0);
      f[s].assign(ops.cellBlock, 0.0);
    }
    for (int s = 0; s < 2 * ops.dims; ++s) targets.push_back(HullTarget{q[s], f[s]});
  }
};

// Quadratic test profile in physical coordinates.
double profile(double x, double y) { return 1.0 + x + 0.5 * y * y; }

// Nodal samples of `profile` on a cell of width h at the origin.
std::vector<double> sampleProfile(const Operators& ops, double h) {
  std::vector<double> Q(ops.cellBlock);
  for (int i1 = 0; i1 < ops.n; ++i1)
    for (int i0 = 0; i0 < ops.n; ++i0) Q[i0 + ops.n * i1] = profile(h * ops.basis.nodes[i0], h * ops.basis.nodes[i1]);
  return Q;
}

// Lagrange basis function j and its derivative at x (5-point stencil, exact for degree <= 4).
double phi(const Basis1D& b, int j, double x) { return b.evaluate(x)[j]; }
double dphi(const Basis1D& b, int j, double x) {
  const double e = 1e-3;
  return (-phi(b, j, x + 2 * e) + 8 * phi(b, j, x + e) - 8 * phi(b, j, x - e) + phi(b, j, x - 2 * e)) / (12 * e);
}

// Composite 4-point Gauss rule on `pieces` equal subintervals.
QuadratureRule compositeRule(int pieces) {
  const auto base = gaussLegendre(3);
  QuadratureRule r;
  for (int k = 0; k < pieces; ++k)
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      r.nodes.push_back((k + base.nodes[i]) / pieces);
      r.weights.push_back(base.weights[i] / pieces);
    }
  return r;
}

// Kronecker product M1 (x) M1 for the tensor mass matrix; node index i0 + n i1.
Eigen::MatrixXd kron(const Eigen::MatrixXd& M1) {
  const auto n = M1.rows();
  Eigen::MatrixXd K(n * n, n * n);
  for (Eigen::Index a1 = 0; a1 < n; ++a1)
    for (Eigen::Index a0 = 0; a0 < n; ++a0)
      for (Eigen::Index b1 = 0; b1 < n; ++b1)
        for (Eigen::Index b0 = 0; b0 < n; ++b0) K(a0 + n * a1, b0 + n * b1) = M1(a0, b0) * M1(a1, b1);
  return K;
}

// Dense (2-D, scalar) mass matrix by quadrature on a 5x finer Gauss rule.
Eigen::MatrixXd denseMass(const Basis1D& b, const QuadratureRule& g) {
  const int n = b.size();
  Eigen::MatrixXd M1(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < g.nodes.size(); ++k) s += g.weights[k] * phi(b, i, g.nodes[k]) * phi(b, j, g.nodes[k]);
      M1(i, j) = s;
    }
  return kron(M1);
}

}  // namespace


TEST(Operators, Sizes) {
  const Operators ops(3, 3, 5);
  EXPECT_EQ(ops.spatialNodes, 64u);
  EXPECT_EQ(ops.faceNodes, 16u);
  EXPECT_EQ(ops.cellBlock, 320u);
  EXPECT_EQ(ops.spaceTimeBlock, 1280u);
  EXPECT_EQ(ops.predictorSize(), 4u * 1280u);
  EXPECT_EQ(ops.cellNode(1, 0, 2), 8u);
  EXPECT_EQ(ops.cellNode(0, 5, 3), 4u * 5u + 3u);
}

TEST(Predict, ConstantStateIsStationary) {
  const Operators ops(2, 3, 4);
  EulerSystem pde(2);
  const auto Q = constantBlock(ops, {1.2, 0.3, -0.1, 2.9});
  SpaceTimePolynomial stp(ops);
  predict(ops, pde, Q, 0.01, 0.1, stp.data);
  std::vector<double> f(4);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t e = 0; e < ops.cellBlock; ++e) EXPECT_NEAR(stp.qstar()[t * ops.cellBlock + e], Q[e], 1e-14);
  for (int a = 0; a < 2; ++a) {
    pde.flux(std::span<const double>(Q.data(), 4), a, f);
    for (std::size_t k = 0; k < ops.spaceTimeBlock; ++k) EXPECT_NEAR(stp.fstar(a)[k], f[k % 4], 1e-14);
  }
}

TEST(Predict, ZeroStepReplicatesSolution) {
  const Operators ops(2, 2, 4);
  EulerSystem pde(2);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  auto Q = constantBlock(ops, {1.0, 0.2, 0.1, 2.5});
  for (double& v : Q) v += u(rng);
  SpaceTimePolynomial stp(ops);
  const PredictStats stats = predict(ops, pde, Q, 0.0, 0.1, stp.data);
  EXPECT_EQ(stats.iterations, 0);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t e = 0; e < ops.cellBlock; ++e) EXPECT_EQ(stp.qstar()[t * ops.cellBlock + e], Q[e]);
}

TEST(Predict, AdvectedPolynomialIsExact) {
  const Operators ops(2, 2, 1);
  AdvectionSystem pde({0.5, 0.25});
  const double h = 1.0 / 3.0, dt = 0.02;
  const auto Q = sampleProfile(ops, h);
  SpaceTimePolynomial stp(ops);
  const PredictStats stats = predict(ops, pde, Q, dt, h, stp.data);
  EXPECT_TRUE(stats.converged);
  EXPECT_LE(stats.iterations, 2 * ops.n);
  for (int k = 0; k < ops.n; ++k) {
    const double t = dt * ops.basis.nodes[k];
    for (int i1 = 0; i1 < ops.n; ++i1)
      for (int i0 = 0; i0 < ops.n; ++i0) {
        const double x = h * ops.basis.nodes[i0] - 0.5 * t, y = h * ops.basis.nodes[i1] - 0.25 * t;
        EXPECT_NEAR(stp.qstar()[k * ops.cellBlock + i0 + 3 * i1], profile(x, y), 1e-8);
      }
  }
  EXPECT_LT(predictorResidual(ops, pde, Q, dt, h, stp.data), 1e-10);
}

TEST(Predict, SmoothEulerConvergesWithSmallResidual) {
  const Operators ops(2, 3, 4);
  EulerSystem pde(2);
  const double h = 1.0 / 9.0;
  std::vector<double> Q(ops.cellBlock);
  for (std::size_t s = 0; s < ops.spatialNodes; ++s) {
    const double x = h * ops.basis.nodes[s % 4];
    const double rho = 1.0 + 0.2 * std::sin(2 * M_PI * x);
    Q[s * 4 + 0] = rho;
    Q[s * 4 + 1] = rho * 0.3;
    Q[s * 4 + 2] = 0.0;
    Q[s * 4 + 3] = 2.5 + 0.5 * rho * 0.09;
  }
  const double dt = *calcTimeStep(ops, pde, Q, h);
  SpaceTimePolynomial stp(ops);
  const PredictStats stats = predict(ops, pde, Q, dt, h, stp.data);
  EXPECT_TRUE(stats.converged);
  EXPECT_LT(predictorResidual(ops, pde, Q, dt, h, stp.data), 1e-9);
}

TEST(Predict, NonFiniteThrowsWithCell) {
  const Operators ops(2, 1, 4);
  EulerSystem pde(2);
  auto Q = constantBlock(ops, {1.0, 0.0, 0.0, 2.5});
  Q[5] = NAN;
  SpaceTimePolynomial stp(ops);
  try {
    predict(ops, pde, Q, 0.01, 0.1, stp.data, nullptr, 17);
    FAIL() << "expected PredictorFailure";
  } catch (const PredictorFailure& e) {
    EXPECT_EQ(e.cell(), 17);
  }
}

TEST(Predict, LedgerTraffic) {
  const Operators ops(3, 3, 5);
  EulerSystem pde(3);
  AccessLedger ledger;
  SpaceTimePolynomial stp(ops);
  predict(ops, pde, constantBlock(ops, test::restState(3)), 0.001, 0.1, stp.data, &ledger);
  EXPECT_EQ(ledger.totals()[Task::predict].reads, 320u);
  EXPECT_EQ(ledger.totals()[Task::predict].writes, 4u * 1280u);
}

TEST(Extrapolate, ConstantHull) {
  const Operators ops(3, 2, 5);
  EulerSystem pde(3);
  const std::vector<double> q{1.0, 0.5, 0.0, 0.0, 2.5};
  SpaceTimePolynomial stp(ops);
  predict(ops, pde, constantBlock(ops, q), 0.0, 0.1, stp.data);
  Hull hull(ops);
  AccessLedger ledger;
  extrapolate(ops, stp.data, hull.targets, &ledger);
  const FluxTensor F = eulerFlux(q);
  for (int a = 0; a < 3; ++a)
    for (int side = 0; side < 2; ++side)
      for (std::size_t e = 0; e < ops.cellBlock; ++e) {
        EXPECT_NEAR(hull.q[2 * a + side][e], q[e % 5], 1e-14);
        EXPECT_NEAR(hull.f[2 * a + side][e], (side == 0 ? -1 : 1) * F(a, static_cast<int>(e % 5)), 1e-14);
      }
}

TEST(Extrapolate, LedgerTraffic) {
  const Operators ops(3, 3, 5);
  SpaceTimePolynomial stp(ops);
  Hull hull(ops);
  AccessLedger ledger;
  extrapolate(ops, stp.data, hull.targets, &ledger);
  // 4d m (p+1)^d
  EXPECT_EQ(ledger.totals()[Task::extrapolate].writes, 4u * 3u * 5u * 64u);
}

TEST(Extrapolate, PolynomialTraceIsAnalytic) {
  const Operators ops(2, 2, 1);
  AdvectionSystem pde({0.5, 0.25});
  const double h = 1.0 / 3.0, dt = 0.02;
  SpaceTimePolynomial stp(ops);
  predict(ops, pde, sampleProfile(ops, h), dt, h, stp.data);
  Hull hull(ops);
  extrapolate(ops, stp.data, hull.targets);
  for (int k = 0; k < 3; ++k) {
    const double t = dt * ops.basis.nodes[k];
    for (int fs = 0; fs < 3; ++fs) {
      const double s = h * ops.basis.nodes[fs];
      const std::size_t idx = static_cast<std::size_t>(k * 3 + fs);
      // x faces: tangential coordinate y; y faces: tangential x.
      EXPECT_NEAR(hull.q[0][idx], profile(0 - 0.5 * t, s - 0.25 * t), 1e-12);
      EXPECT_NEAR(hull.q[1][idx], profile(h - 0.5 * t, s - 0.25 * t), 1e-12);
      EXPECT_NEAR(hull.q[2][idx], profile(s - 0.5 * t, 0 - 0.25 * t), 1e-12);
      EXPECT_NEAR(hull.q[3][idx], profile(s - 0.5 * t, h - 0.25 * t), 1e-12);
      EXPECT_NEAR(hull.f[0][idx], -0.5 * hull.q[0][idx], 1e-12);
      EXPECT_NEAR(hull.f[3][idx], 0.25 * hull.q[3][idx], 1e-12);
    }
  }
}

namespace {

Face makeFace(const Operators& ops, int axis, std::array<int, 2> cells) {
  Face f;
  f.axis = axis;
  f.cells = cells;
  for (int s = 0; s < 2; ++s) {
    f.hullQ[s].assign(ops.cellBlock, 0.0);
    f.hullF[s].assign(ops.cellBlock, 0.0);
    f.riemann[s].assign(ops.cellBlock, 0.0);
    f.hullStep[s] = 4;
  }
  return f;
}

// Fills a face side with a constant state and its outward flux.
void fillSide(const Operators& ops, const PdeSystem& pde, Face& f, int side, const std::vector<double>& q) {
  std::vector<double> flux(q.size());
  pde.flux(q, f.axis, flux);
  const double outward = side == 0 ? 1.0 : -1.0;  // minus cell's upper face points along +axis
  for (std::size_t e = 0; e < ops.cellBlock; ++e) {
    f.hullQ[side][e] = q[e % q.size()];
    f.hullF[side][e] = outward * flux[e % q.size()];
  }
}

}  // namespace

TEST(SolveRiemann, ConsistentForIdenticalTraces) {
  const Operators ops(2, 2, 4);
  EulerSystem pde(2);
  const std::vector<double> q{1.1, 0.3, -0.2, 2.7};
  Face f = makeFace(ops, 1, {0, 1});
  fillSide(ops, pde, f, 0, q);
  fillSide(ops, pde, f, 1, q);
  solveRiemann(ops, pde, f, 4);
  std::vector<double> flux(4);
  pde.flux(q, 1, flux);
  for (std::size_t e = 0; e < ops.cellBlock; ++e) {
    EXPECT_NEAR(f.riemann[0][e], flux[e % 4], 1e-14);
    EXPECT_NEAR(f.riemann[1][e], -flux[e % 4], 1e-14);
  }
}

TEST(SolveRiemann, RusanovIsUpwindForAdvection) {
  const Operators ops(2, 1, 1);
  AdvectionSystem pde({2.0, 0.0});
  Face f = makeFace(ops, 0, {0, 1});
  fillSide(ops, pde, f, 0, {3.0});
  fillSide(ops, pde, f, 1, {-1.0});
  EXPECT_DOUBLE_EQ(solveRiemann(ops, pde, f, 4), 2.0);
  for (std::size_t e = 0; e < ops.cellBlock; ++e) EXPECT_DOUBLE_EQ(f.riemann[0][e], 6.0);
}

TEST(SolveRiemann, OutflowGhostMirrorsInterior) {
  const Operators ops(2, 1, 4);
  EulerSystem pde(2);
  const std::vector<double> q{1.0, 0.4, 0.0, 2.5};
  std::vector<double> flux(4);
  pde.flux(q, 0, flux);
  // Interior cell on the plus side of a lower boundary face.
  Face f = makeFace(ops, 0, {-1, 2});
  fillSide(ops, pde, f, 1, q);
  solveRiemann(ops, pde, f, 4);
  for (std::size_t e = 0; e < ops.cellBlock; ++e) EXPECT_NEAR(f.riemann[1][e], -flux[e % 4], 1e-14);
}

TEST(SolveRiemann, RejectsStaleHull) {
  const Operators ops(2, 1, 1);
  AdvectionSystem pde({1.0, 0.0});
  Face f = makeFace(ops, 0, {0, 1});
  f.hullStep[1] = 3;
  EXPECT_THROW(solveRiemann(ops, pde, f, 4), SchedulingError);
}

TEST(SolveRiemann, LedgerTrafficPerCellEquivalent) {
  const Operators ops(3, 3, 5);
  EulerSystem pde(3);
  AccessLedger ledger;
  // A periodic grid has d faces per cell.
  for (int k = 0; k < 3; ++k) {
    Face f = makeFace(ops, k, {0, 1});
    fillSide(ops, pde, f, 0, test::restState(3));
    fillSide(ops, pde, f, 1, test::restState(3));
    solveRiemann(ops, pde, f, 4, &ledger);
  }
  EXPECT_EQ(ledger.totals()[Task::solveRiemann].reads, 4u * 3u * 5u * 64u);
  EXPECT_EQ(ledger.totals()[Task::solveRiemann].writes, 2u * 3u * 5u * 64u);
}

// Weak form: a constant flux leaves only the boundary term c F (phi_i(1) - phi_i(0)) / w_i.
TEST(IntegrateVolume, ConstantFluxIsBoundaryLift) {
  const Operators ops(3, 3, 5);
  EulerSystem pde(3);
  const std::vector<double> q{1.0, 0.2, 0.1, -0.3, 2.8};
  SpaceTimePolynomial stp(ops);
  predict(ops, pde, constantBlock(ops, q), 0.01, 0.1, stp.data);
  std::vector<double> D(ops.cellBlock, 1.0);
  AccessLedger ledger;
  integrateVolume(ops, stp.data, 0.01, 0.1, D, &ledger);
  const FluxTensor F = eulerFlux(q);
  const Basis1D& b = ops.basis;
  for (std::size_t s = 0; s < ops.spatialNodes; ++s)
    for (int v = 0; v < 5; ++v) {
      double expected = 0.0;
      for (int a = 0; a < 3; ++a) {
        const std::size_t i = (s / ops.stride[a]) % 4;
        expected += 0.1 * F(a, v) * (b.right[i] - b.left[i]) / b.weights[i];
      }
      EXPECT_NEAR(D[s * 5 + v], expected, 1e-12);
    }
  // d m (p+1)^(d+1)
  EXPECT_EQ(ledger.totals()[Task::integrateVolume].reads, 3u * 5u * 256u);
  EXPECT_EQ(ledger.totals()[Task::integrateVolume].writes, 5u * 64u);
}

TEST(IntegrateVolume, LinearProfileMatchesAnalyticIntegral) {
  const Operators ops(2, 1, 1);
  AdvectionSystem pde({1.0, 0.0});
  const double dt = 0.05, h = 0.5;
  std::vector<double> Q(4);
  for (int i1 = 0; i1 < 2; ++i1)
    for (int i0 = 0; i0 < 2; ++i0) Q[i0 + 2 * i1] = ops.basis.nodes[i0];
  SpaceTimePolynomial stp(ops);
  predict(ops, pde, Q, 0.0, h, stp.data);
  std::vector<double> D(4);
  integrateVolume(ops, stp.data, dt, h, D);
  // (1/w_i) int phi_i' xi dxi = -+ sqrt(3) for the two-point basis.
  const double c = dt / h;
  for (int i1 = 0; i1 < 2; ++i1) {
    EXPECT_NEAR(D[0 + 2 * i1], -c * std::sqrt(3.0), 1e-10);
    EXPECT_NEAR(D[1 + 2 * i1], c * std::sqrt(3.0), 1e-10);
  }
}

TEST(IntegrateVolume, MatchesDenseQuadrature) {
  const int p = 2, n = 3;
  const Operators ops(2, p, 1);
  const Basis1D& b = ops.basis;
  const auto g = compositeRule(5);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> stp(ops.predictorSize());
  for (double& v : stp) v = u(rng);
  const double dt = 0.1, h = 0.25;
  std::vector<double> D(ops.cellBlock);
  integrateVolume(ops, stp, dt, h, D);

  // Interpolated flux F_a(t, x, y) from nodal space-time values.
  auto flux = [&](int a, double t, double x, double y) {
    const auto pt = b.evaluate(t), px = b.evaluate(x), py = b.evaluate(y);
    double s = 0;
    for (int k = 0; k < n; ++k)
      for (int j1 = 0; j1 < n; ++j1)
        for (int j0 = 0; j0 < n; ++j0)
          s += pt[k] * px[j0] * py[j1] * stp[(a + 1) * ops.spaceTimeBlock + k * 9 + j0 + 3 * j1];
    return s;
  };
  Eigen::VectorXd rhs(9);
  for (int i1 = 0; i1 < n; ++i1)
    for (int i0 = 0; i0 < n; ++i0) {
      double s = 0;
      for (std::size_t kt = 0; kt < g.nodes.size(); ++kt)
        for (std::size_t kx = 0; kx < g.nodes.size(); ++kx)
          for (std::size_t ky = 0; ky < g.nodes.size(); ++ky) {
            const double t = g.nodes[kt], x = g.nodes[kx], y = g.nodes[ky];
            const double w = g.weights[kt] * g.weights[kx] * g.weights[ky];
            s += w * (dphi(b, i0, x) * phi(b, i1, y) * flux(0, t, x, y) +
                      phi(b, i0, x) * dphi(b, i1, y) * flux(1, t, x, y));
          }
      rhs(i0 + 3 * i1) = dt / h * s;
    }
  const Eigen::VectorXd expected = denseMass(b, g).ldlt().solve(rhs);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(D[i], expected(i), 1e-10);
}

TEST(IntegrateFace, ZeroFluxLeavesDUnchanged) {
  const Operators ops(2, 2, 4);
  std::vector<double> zero(ops.cellBlock, 0.0);
  std::vector<std::span<const double>> fluxes(4, zero);
  std::vector<double> D(ops.cellBlock, 0.25);
  integrateFace(ops, fluxes, 0.1, 0.1, D);
  for (double v : D) EXPECT_EQ(v, 0.25);
}

TEST(IntegrateFace, UniformStateCancelsVolume) {
  const Operators ops(2, 3, 4);
  EulerSystem pde(2);
  const std::vector<double> q{1.0, 0.3, 0.2, 2.6};
  SpaceTimePolynomial stp(ops);
  predict(ops, pde, constantBlock(ops, q), 0.01, 0.1, stp.data);
  Hull hull(ops);
  extrapolate(ops, stp.data, hull.targets);
  // Rusanov of identical traces equals the outward physical flux.
  std::vector<std::span<const double>> fluxes;
  for (auto& f : hull.f) fluxes.emplace_back(f);
  std::vector<double> D(ops.cellBlock);
  integrateVolume(ops, stp.data, 0.01, 0.1, D);
  AccessLedger ledger;
  integrateFace(ops, fluxes, 0.01, 0.1, D, &ledger);
  for (double v : D) EXPECT_NEAR(v, 0.0, 1e-13);
  EXPECT_EQ(ledger.totals()[Task::integrateFace].reads, 4u * ops.cellBlock);
}

TEST(IntegrateFace, MatchesDenseQuadrature) {
  const int p = 2, n = 3;
  const Operators ops(2, p, 1);
  const Basis1D& b = ops.basis;
  const auto g = compositeRule(5);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::vector<double>> blocks(4, std::vector<double>(ops.cellBlock));
  for (auto& blk : blocks)
    for (double& v : blk) v = u(rng);
  std::vector<std::span<const double>> fluxes(blocks.begin(), blocks.end());
  const double dt = 0.1, h = 0.25;
  std::vector<double> D(ops.cellBlock, 0.0);
  integrateFace(ops, fluxes, dt, h, D);

  // Face flux F_slot(t, s), interpolated from [t][faceNode] values.
  auto faceFlux = [&](int slot, double t, double s) {
    const auto pt = b.evaluate(t), ps = b.evaluate(s);
    double r = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) r += pt[k] * ps[j] * blocks[slot][k * n + j];
    return r;
  };
  Eigen::VectorXd rhs(9);
  for (int i1 = 0; i1 < n; ++i1)
    for (int i0 = 0; i0 < n; ++i0) {
      double s = 0;
      for (std::size_t kt = 0; kt < g.nodes.size(); ++kt)
        for (std::size_t ks = 0; ks < g.nodes.size(); ++ks) {
          const double t = g.nodes[kt], z = g.nodes[ks], w = g.weights[kt] * g.weights[ks];
          for (int side = 0; side < 2; ++side) {
            s += w * phi(b, i0, side) * phi(b, i1, z) * faceFlux(side, t, z);
            s += w * phi(b, i0, z) * phi(b, i1, side) * faceFlux(2 + side, t, z);
          }
        }
      rhs(i0 + 3 * i1) = -dt / h * s;
    }
  const Eigen::VectorXd expected = denseMass(b, g).ldlt().solve(rhs);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(D[i], expected(i), 1e-10);
}

TEST(Update, ZeroIncrementKeepsSolution) {
  std::vector<double> Q{1.0, 2.0, 3.0}, D(3, 0.0);
  const auto before = Q;
  update(Q, D, {});
  EXPECT_EQ(Q, before);
}

TEST(Update, NegatedIncrementRestores) {
  // Dyadic values: both additions are exact.
  std::vector<double> Q{1.5, -0.25, 3.0}, D{0.125, 2.0, -1.0}, minusD{-0.125, -2.0, 1.0};
  const auto before = Q;
  update(Q, D, {});
  update(Q, minusD, {});
  EXPECT_EQ(Q, before);
}

TEST(Update, RollbackCopyIsBitwise) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> Q(50), D(50), prev(50);
  for (std::size_t i = 0; i < 50; ++i) {
    Q[i] = u(rng);
    D[i] = u(rng) * 1e-3;
  }
  const auto before = Q;
  AccessLedger ledger;
  update(Q, D, prev, &ledger);
  EXPECT_EQ(prev, before);
  EXPECT_EQ(ledger.totals()[Task::update].reads, 50u);
  EXPECT_EQ(ledger.totals()[Task::update].writes, 50u);
}

TEST(CalcTimeStep, OneDimensionalFirstOrder) {
  const Operators ops(1, 0, 1);
  AdvectionSystem pde({2.0});
  EXPECT_DOUBLE_EQ(*calcTimeStep(ops, pde, std::vector<double>{1.0}, 0.1, 0.9), 0.9 * 0.1 / 2.0);
}

TEST(CalcTimeStep, UniformEulerThreeD) {
  const Operators ops(3, 3, 5);
  EulerSystem pde(3);
  const double dt = *calcTimeStep(ops, pde, constantBlock(ops, test::restState(3)), 1.0 / 27.0, 0.9);
  EXPECT_NEAR(dt, 0.9 * (1.0 / 27.0) / (3 * 7 * std::sqrt(1.4)), 1e-16);
}

TEST(CalcTimeStep, HomogeneousInSignalSpeed) {
  const Operators ops(2, 2, 1);
  const std::vector<double> Q(9, 1.0);
  const double a = *calcTimeStep(ops, AdvectionSystem({1.0, 0.5}), Q, 0.1);
  const double b = *calcTimeStep(ops, AdvectionSystem({2.0, 1.0}), Q, 0.1);
  EXPECT_DOUBLE_EQ(a, 2 * b);
}

TEST(CalcTimeStep, InadmissibleCellHasNoCandidate) {
  const Operators ops(2, 1, 4);
  EulerSystem pde(2);
  auto Q = constantBlock(ops, test::restState(2));
  Q[4] = -1.0;
  EXPECT_FALSE(calcTimeStep(ops, pde, Q, 0.1));
}

TEST(UpdateTimeStepSizes, Strict) {
  TimeControl tc;
  tc.safety = 0.99;
  tc.dtNew = 0.05;
  tc.dtAdm = 0.1;
  updateTimeStepSizes(tc);
  EXPECT_DOUBLE_EQ(tc.dtOld, 0.05);
  EXPECT_NEAR(tc.dtNew, 0.099, 1e-16);
}

TEST(UpdateTimeStepSizes, Creeping) {
  TimeControl tc;
  tc.averaging = Averaging::creeping;
  tc.safety = 0.9;
  tc.dtNew = 0.08;
  tc.dtAdm = 0.1;
  updateTimeStepSizes(tc);
  EXPECT_NEAR(tc.dtNew, 0.085, 1e-16);
}

TEST(UpdateTimeStepSizes, CreepingConvergesMonotonically) {
  TimeControl tc;
  tc.averaging = Averaging::creeping;
  tc.safety = 0.9;
  tc.dtNew = 0.01;
  tc.dtAdm = 0.1;
  double gap = 0.09 - tc.dtNew;
  for (int i = 0; i < 60; ++i) {
    updateTimeStepSizes(tc);
    const double next = 0.09 - tc.dtNew;
    EXPECT_GT(next, -1e-15);
    EXPECT_LE(next, gap);
    gap = next;
  }
  EXPECT_NEAR(tc.dtNew, 0.09, 1e-15);
}

TEST(UpdateTimeStepSizes, ForcedOverrides) {
  TimeControl tc;
  tc.forcedDt = 0.003;
  tc.dtAdm = 1.0;
  updateTimeStepSizes(tc);
  EXPECT_DOUBLE_EQ(tc.dtNew, 0.003);
}

TEST(UpdateTimeStepSizes, RejectsNonPositiveAdmissible) {
  TimeControl tc;
  tc.dtAdm = 0.0;
  EXPECT_THROW(updateTimeStepSizes(tc), NumericalFailure);
  tc.dtAdm = INFINITY;
  EXPECT_THROW(updateTimeStepSizes(tc), NumericalFailure);
}
