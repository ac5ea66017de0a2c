#include "cadg/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "cadg/errors.hpp"

namespace cadg {

namespace {

std::size_t upow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

/// out[l][node][v] = sum_a sum_j Dref[i_a][j] F_a[l][node_a(j)][v]  (reference derivative).
void fluxDivergence(const Operators& ops, std::span<const double> stp, std::vector<double>& out) {
  const std::size_t n = static_cast<std::size_t>(ops.n);
  const std::size_t m = static_cast<std::size_t>(ops.m);
  const std::size_t Ns = ops.spatialNodes;
  out.assign(ops.spaceTimeBlock, 0.0);
  for (int a = 0; a < ops.dims; ++a) {
    const double* F = stp.data() + static_cast<std::size_t>(a + 1) * ops.spaceTimeBlock;
    const std::size_t st = ops.stride[static_cast<std::size_t>(a)];
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t s = 0; s < Ns; ++s) {
        const std::size_t i = (s / st) % n;
        const std::size_t base = s - i * st;
        double* o = out.data() + (t * Ns + s) * m;
        for (std::size_t j = 0; j < n; ++j) {
          const double dij = ops.basis.diff[i * n + j];
          const double* f = F + (t * Ns + base + j * st) * m;
          for (std::size_t v = 0; v < m; ++v) o[v] += dij * f[v];
        }
      }
    }
  }
}

void evaluateFluxes(const Operators& ops, const PdeSystem& pde, std::span<double> stp) {
  const std::size_t m = static_cast<std::size_t>(ops.m);
  const std::size_t points = ops.spaceTimeBlock / m;
  for (int a = 0; a < ops.dims; ++a) {
    double* F = stp.data() + static_cast<std::size_t>(a + 1) * ops.spaceTimeBlock;
    for (std::size_t k = 0; k < points; ++k) {
      pde.flux(std::span<const double>(stp.data() + k * m, m), a, std::span<double>(F + k * m, m));
    }
  }
}

}  // namespace

Operators::Operators(int d, int p, int components)
    : dims(d), order(p), n(p + 1), m(components), basis(makeBasis(p)) {
  if (d < 1 || d > 3) throw ConfigError("dimension must lie in [1, 3]");
  if (components < 1) throw ConfigError("component count must be positive");
  const auto nn = static_cast<std::size_t>(n);
  spatialNodes = upow(nn, d);
  faceNodes = upow(nn, d - 1);
  cellBlock = spatialNodes * static_cast<std::size_t>(m);
  spaceTimeBlock = cellBlock * nn;
  for (int a = 0; a < 3; ++a) stride[static_cast<std::size_t>(a)] = upow(nn, a);

  Eigen::MatrixXd K1(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      K1(k, l) = basis.right[static_cast<std::size_t>(k)] * basis.right[static_cast<std::size_t>(l)] -
                 basis.weights[static_cast<std::size_t>(l)] * basis.d(l, k);
    }
  }
  Eigen::MatrixXd W = Eigen::VectorXd::Map(basis.weights.data(), n).asDiagonal();
  const Eigen::MatrixXd A = K1.partialPivLu().solve(W);
  timeMatrix.resize(nn * nn);
  volume.resize(nn * nn);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      const auto idx = static_cast<std::size_t>(k * n + l);
      timeMatrix[idx] = A(k, l);
      volume[idx] = basis.weights[static_cast<std::size_t>(l)] * basis.d(l, k) / basis.weights[static_cast<std::size_t>(k)];
    }
  }
  for (int s = 0; s < 2; ++s) {
    const auto& phi = s == 0 ? basis.left : basis.right;
    auto& fw = faceWeight[static_cast<std::size_t>(s)];
    fw.resize(nn);
    for (std::size_t j = 0; j < nn; ++j) fw[j] = phi[j] / basis.weights[j];
  }
  for (int a = 0; a < d; ++a) {
    auto& fb = faceBase[static_cast<std::size_t>(a)];
    fb.clear();
    for (std::size_t s = 0; s < spatialNodes; ++s) {
      if ((s / stride[static_cast<std::size_t>(a)]) % nn == 0) fb.push_back(s);
    }
  }
}

PredictStats predict(const Operators& ops, const PdeSystem& pde, std::span<const double> Q, double dt, double h,
                     std::span<double> stp, AccessLedger* ledger, int cell) {
  const std::size_t n = static_cast<std::size_t>(ops.n);
  const std::size_t M = ops.cellBlock;
  if (Q.size() != M || stp.size() != ops.predictorSize()) throw UsageError("predict: block size mismatch");
  if (dt < 0.0) throw UsageError("predict: negative time step");

  std::span<double> q = stp.subspan(0, ops.spaceTimeBlock);
  for (std::size_t t = 0; t < n; ++t) std::copy(Q.begin(), Q.end(), q.begin() + static_cast<std::ptrdiff_t>(t * M));

  PredictStats stats;
  if (dt > 0.0) {
    double qmax = 0.0;
    for (double v : Q) qmax = std::max(qmax, std::abs(v));
    const double tol = 1e-10 * (1.0 + qmax);
    const int cap = 2 * ops.n;
    const double c = dt / h;
    thread_local std::vector<double> div;
    stats.converged = false;
    for (int it = 1; it <= cap; ++it) {
      evaluateFluxes(ops, pde, stp);
      fluxDivergence(ops, stp, div);
      double increment = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t e = 0; e < M; ++e) {
          double acc = 0.0;
          for (std::size_t l = 0; l < n; ++l) acc += ops.timeMatrix[k * n + l] * div[l * M + e];
          const double next = Q[e] - c * acc;
          const double delta = std::abs(next - q[k * M + e]);
          increment = std::isnan(delta) ? delta : std::max(increment, delta);
          q[k * M + e] = next;
        }
      }
      stats.iterations = it;
      stats.increment = increment;
      if (!std::isfinite(increment)) break;
      if (increment <= tol) {
        stats.converged = true;
        break;
      }
    }
  }
  evaluateFluxes(ops, pde, stp);
  for (double v : stp) {
    if (!std::isfinite(v)) {
      throw PredictorFailure("space-time predictor produced a non-finite value in cell " + std::to_string(cell), cell);
    }
  }
  if (ledger != nullptr) ledger->charge(Task::predict, M, ops.predictorSize());
  return stats;
}

double predictorResidual(const Operators& ops, const PdeSystem& pde, std::span<const double> Q, double dt, double h,
                         std::span<const double> stp) {
  const std::size_t n = static_cast<std::size_t>(ops.n);
  const std::size_t M = ops.cellBlock;
  std::vector<double> work(stp.begin(), stp.end());
  evaluateFluxes(ops, pde, work);
  std::vector<double> div;
  fluxDivergence(ops, work, div);
  double res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t e = 0; e < M; ++e) {
      double r = -ops.basis.left[k] * Q[e];
      for (std::size_t l = 0; l < n; ++l) {
        const double K1 = ops.basis.right[k] * ops.basis.right[l] - ops.basis.weights[l] * ops.basis.d(static_cast<int>(l), static_cast<int>(k));
        r += K1 * work[l * M + e];
      }
      r += dt / h * ops.basis.weights[k] * div[k * M + e];
      res = std::max(res, std::abs(r));
    }
  }
  return res;
}

void extrapolate(const Operators& ops, std::span<const double> stp, std::span<const HullTarget> targets,
                 AccessLedger* ledger) {
  const std::size_t n = static_cast<std::size_t>(ops.n);
  const std::size_t m = static_cast<std::size_t>(ops.m);
  const std::size_t Ns = ops.spatialNodes;
  const std::size_t Nf = ops.faceNodes;
  if (targets.size() != static_cast<std::size_t>(2 * ops.dims)) throw UsageError("extrapolate: need 2d targets");
  for (int a = 0; a < ops.dims; ++a) {
    const double* F = stp.data() + static_cast<std::size_t>(a + 1) * ops.spaceTimeBlock;
    for (int side = 0; side < 2; ++side) {
      const HullTarget& tgt = targets[static_cast<std::size_t>(2 * a + side)];
      const auto& phi = side == 0 ? ops.basis.left : ops.basis.right;
      const double sign = side == 0 ? -1.0 : 1.0;
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t fs = 0; fs < Nf; ++fs) {
          double* oq = tgt.q.data() + (t * Nf + fs) * m;
          double* of = tgt.f.data() + (t * Nf + fs) * m;
          for (std::size_t v = 0; v < m; ++v) {
            oq[v] = 0.0;
            of[v] = 0.0;
          }
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t node = ops.cellNode(a, fs, static_cast<int>(j));
            const double* qs = stp.data() + (t * Ns + node) * m;
            const double* fs_ = F + (t * Ns + node) * m;
            for (std::size_t v = 0; v < m; ++v) {
              oq[v] += phi[j] * qs[v];
              of[v] += phi[j] * fs_[v];
            }
          }
          for (std::size_t v = 0; v < m; ++v) of[v] = sign * of[v];
        }
      }
    }
  }
  if (ledger != nullptr) {
    ledger->charge(Task::extrapolate, ops.predictorSize(), 4 * static_cast<std::size_t>(ops.dims) * ops.cellBlock);
  }
}

double solveRiemann(const Operators& ops, const PdeSystem& pde, Face& face, long step, AccessLedger* ledger) {
  const std::size_t M = ops.cellBlock;
  const std::size_t m = static_cast<std::size_t>(ops.m);
  for (int s = 0; s < 2; ++s) {
    if (face.cells[static_cast<std::size_t>(s)] >= 0 && face.hullStep[static_cast<std::size_t>(s)] != step) {
      throw SchedulingError("solveRiemann: hull side " + std::to_string(s) + " holds step " +
                            std::to_string(face.hullStep[static_cast<std::size_t>(s)]) + ", expected " +
                            std::to_string(step));
    }
  }
  // Outflow boundary: the ghost side mirrors the interior trace, F.n flips with the normal.
  const int inner = face.interiorSide();
  const bool boundary = face.isBoundary();
  auto qOf = [&](int s) -> const double* {
    return face.hullQ[static_cast<std::size_t>(boundary ? inner : s)].data();
  };
  const double* qm = qOf(0);
  const double* qp = qOf(1);
  const double* fm = face.hullF[static_cast<std::size_t>(boundary ? inner : 0)].data();
  const double* fp = face.hullF[static_cast<std::size_t>(boundary ? inner : 1)].data();
  const double fmSign = boundary && inner == 1 ? -1.0 : 1.0;
  const double fpSign = boundary && inner == 0 ? -1.0 : 1.0;

  double alpha = 0.0;
  for (std::size_t k = 0; k < M; k += m) {
    alpha = std::max(alpha, pde.maxSignalSpeed(std::span<const double>(qm + k, m), face.axis));
    alpha = std::max(alpha, pde.maxSignalSpeed(std::span<const double>(qp + k, m), face.axis));
  }
  double* outMinus = face.cells[0] >= 0 ? face.riemann[0].data() : nullptr;
  double* outPlus = face.cells[1] >= 0 ? face.riemann[1].data() : nullptr;
  for (std::size_t e = 0; e < M; ++e) {
    const double flux = 0.5 * (fmSign * fm[e] - fpSign * fp[e]) - 0.5 * alpha * (qp[e] - qm[e]);
    if (outMinus != nullptr) outMinus[e] = flux;
    if (outPlus != nullptr) outPlus[e] = -flux;
  }
  if (ledger != nullptr) ledger->charge(Task::solveRiemann, 4 * M, 2 * M);
  return alpha;
}

void integrateVolume(const Operators& ops, std::span<const double> stp, double dt, double h, std::span<double> D,
                     AccessLedger* ledger) {
  const std::size_t n = static_cast<std::size_t>(ops.n);
  const std::size_t m = static_cast<std::size_t>(ops.m);
  const std::size_t M = ops.cellBlock;
  const std::size_t Ns = ops.spatialNodes;
  thread_local std::vector<double> collapsed;
  collapsed.assign(M, 0.0);
  std::fill(D.begin(), D.end(), 0.0);
  const double c = dt / h;
  for (int a = 0; a < ops.dims; ++a) {
    const double* F = stp.data() + static_cast<std::size_t>(a + 1) * ops.spaceTimeBlock;
    std::fill(collapsed.begin(), collapsed.end(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double w = ops.basis.weights[t];
      for (std::size_t e = 0; e < M; ++e) collapsed[e] += w * F[t * M + e];
    }
    const std::size_t st = ops.stride[static_cast<std::size_t>(a)];
    for (std::size_t s = 0; s < Ns; ++s) {
      const std::size_t i = (s / st) % n;
      const std::size_t base = s - i * st;
      for (std::size_t j = 0; j < n; ++j) {
        const double g = c * ops.volume[i * n + j];
        const double* f = collapsed.data() + (base + j * st) * m;
        for (std::size_t v = 0; v < m; ++v) D[s * m + v] += g * f[v];
      }
    }
  }
  if (ledger != nullptr) ledger->charge(Task::integrateVolume, static_cast<std::size_t>(ops.dims) * ops.spaceTimeBlock, M);
}

void integrateFace(const Operators& ops, std::span<const std::span<const double>> fluxes, double dt, double h,
                   std::span<double> D, AccessLedger* ledger) {
  const std::size_t n = static_cast<std::size_t>(ops.n);
  const std::size_t m = static_cast<std::size_t>(ops.m);
  const std::size_t Nf = ops.faceNodes;
  if (fluxes.size() != static_cast<std::size_t>(2 * ops.dims)) throw UsageError("integrateFace: need 2d face fluxes");
  const double c = dt / h;
  thread_local std::vector<double> collapsed;
  for (int a = 0; a < ops.dims; ++a) {
    for (int side = 0; side < 2; ++side) {
      const std::span<const double> F = fluxes[static_cast<std::size_t>(2 * a + side)];
      collapsed.assign(Nf * m, 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double w = ops.basis.weights[t];
        for (std::size_t e = 0; e < Nf * m; ++e) collapsed[e] += w * F[t * Nf * m + e];
      }
      const auto& fw = ops.faceWeight[static_cast<std::size_t>(side)];
      for (std::size_t fs = 0; fs < Nf; ++fs) {
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t node = ops.cellNode(a, fs, static_cast<int>(j));
          for (std::size_t v = 0; v < m; ++v) D[node * m + v] -= c * fw[j] * collapsed[fs * m + v];
        }
      }
    }
  }
  if (ledger != nullptr) {
    ledger->charge(Task::integrateFace, 2 * static_cast<std::size_t>(ops.dims) * ops.cellBlock, ops.cellBlock);
  }
}

void update(std::span<double> Q, std::span<const double> D, std::span<double> previousQ, AccessLedger* ledger) {
  if (!previousQ.empty()) std::copy(Q.begin(), Q.end(), previousQ.begin());
  for (std::size_t e = 0; e < Q.size(); ++e) Q[e] += D[e];
  if (ledger != nullptr) ledger->charge(Task::update, Q.size(), Q.size());
}

double maxSignalSpeedOver(const PdeSystem& pde, std::span<const double> states, int dims) {
  const auto m = static_cast<std::size_t>(pde.components());
  double lambda = 0.0;
  for (std::size_t k = 0; k + m <= states.size(); k += m) {
    for (int a = 0; a < dims; ++a) lambda = std::max(lambda, pde.maxSignalSpeed(states.subspan(k, m), a));
  }
  return lambda;
}

std::optional<double> calcTimeStep(const Operators& ops, const PdeSystem& pde, std::span<const double> Q, double h,
                                   double cfl, AccessLedger* ledger) {
  if (ledger != nullptr) ledger->charge(Task::calcTimeStep, ops.cellBlock, 1);
  const auto m = static_cast<std::size_t>(ops.m);
  for (std::size_t k = 0; k < Q.size(); k += m) {
    if (!pde.isAdmissible(Q.subspan(k, m))) return std::nullopt;
  }
  const double lambda = maxSignalSpeedOver(pde, Q, ops.dims);
  return cfl * h / (ops.dims * (2 * ops.order + 1) * lambda);
}

void updateTimeStepSizes(TimeControl& tc) {
  if (!(tc.dtAdm > 0.0) || !std::isfinite(tc.dtAdm)) {
    throw NumericalFailure("admissible time step is " + std::to_string(tc.dtAdm) + " (no admissible cell)", -1);
  }
  tc.dtOld = tc.dtNew;
  if (tc.forcedDt) {
    tc.dtNew = *tc.forcedDt;
  } else if (tc.averaging == Averaging::strict) {
    tc.dtNew = tc.safety * tc.dtAdm;
  } else {
    tc.dtNew = 0.5 * (tc.dtOld + tc.safety * tc.dtAdm);
  }
}

}  // namespace cadg
