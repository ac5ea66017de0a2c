#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "cadg/basis.hpp"
#include "cadg/ledger.hpp"
#include "cadg/mesh.hpp"
#include "cadg/pde.hpp"

namespace cadg {

/// Precomputed 1-D operator tables and index maps for one (d, p, m).
///
/// Node numbering: n = i0 + (p+1) i1 + (p+1)^2 i2, components contiguous.
/// Face blocks are [time][faceNode][component]; face nodes enumerate the
/// tangential axes in increasing axis order.
struct Operators {
  Operators(int dims, int order, int components);

  int dims;
  int order;
  int n;  // p + 1
  int m;
  std::size_t spatialNodes;  // (p+1)^d
  std::size_t faceNodes;     // (p+1)^(d-1)
  std::size_t cellBlock;     // m (p+1)^d
  std::size_t spaceTimeBlock;  // m (p+1)^(d+1)
  Basis1D basis;
  /// Picard time operator A = K1^{-1} W, row-major n x n.
  std::vector<double> timeMatrix;
  /// Weak volume derivative G[i][j] = w_j D[j][i] / w_i.
  std::vector<double> volume;
  /// phi_j(side) / w_j for side 0 (x=0) and 1 (x=1).
  std::array<std::vector<double>, 2> faceWeight;
  std::array<std::size_t, 3> stride{1, 1, 1};
  /// Per axis: cell node with i_axis = 0 for each face node.
  std::array<std::vector<std::size_t>, 3> faceBase;

  /// Cell node touching face node `fs` of an `axis` face at normal index j.
  std::size_t cellNode(int axis, std::size_t fs, int j) const {
    return faceBase[static_cast<std::size_t>(axis)][fs] + static_cast<std::size_t>(j) * stride[static_cast<std::size_t>(axis)];
  }
  /// (d+1) m (p+1)^(d+1): Q* followed by d flux blocks.
  std::size_t predictorSize() const { return static_cast<std::size_t>(dims + 1) * spaceTimeBlock; }
};

/// Transient predictor output: Q* ([t][node][m]) followed by F_a(Q*) for each axis.
struct SpaceTimePolynomial {
  std::vector<double> data;
  double h = 0.0;
  double dt = 0.0;
  int iterations = 0;
  bool converged = true;

  explicit SpaceTimePolynomial(const Operators& ops) : data(ops.predictorSize(), 0.0), block_(ops.spaceTimeBlock) {}
  std::span<double> qstar() { return std::span<double>(data).subspan(0, block_); }
  std::span<double> fstar(int axis) {
    return std::span<double>(data).subspan(static_cast<std::size_t>(axis + 1) * block_, block_);
  }

 private:
  std::size_t block_;
};

struct PredictStats {
  int iterations = 0;
  bool converged = true;
  double increment = 0.0;
};

/// Picard solve of the cell-local space-time problem; writes Q* and F(Q*) into
/// `stp` (size predictorSize()). Throws PredictorFailure(cell) on NaN/Inf.
PredictStats predict(const Operators& ops, const PdeSystem& pde, std::span<const double> Q, double dt, double h,
                     std::span<double> stp, AccessLedger* ledger = nullptr, int cell = -1);

/// Max-norm residual of the collocated space-time equations (diagnostics/tests).
double predictorResidual(const Operators& ops, const PdeSystem& pde, std::span<const double> Q, double dt, double h,
                         std::span<const double> stp);

struct HullTarget {
  std::span<double> q;
  std::span<double> f;  // outward F.n
};

/// Traces Q* and outward F.n onto all 2d faces; targets indexed by slot 2*axis+side.
void extrapolate(const Operators& ops, std::span<const double> stp, std::span<const HullTarget> targets,
                 AccessLedger* ledger = nullptr);

/// Rusanov flux on every space-time face node. Requires the hull sides to carry
/// step `step`; writes each interior side's outward F* into face.riemann.
/// Returns the dissipation coefficient alpha.
double solveRiemann(const Operators& ops, const PdeSystem& pde, Face& face, long step,
                    AccessLedger* ledger = nullptr);

/// D := (dt/h) sum_a G_a (time-collapsed F_a). Overwrites D.
void integrateVolume(const Operators& ops, std::span<const double> stp, double dt, double h, std::span<double> D,
                     AccessLedger* ledger = nullptr);

/// D -= (dt/h) sum over 2d faces of the lifted outward F*; fluxes indexed by slot.
void integrateFace(const Operators& ops, std::span<const std::span<const double>> fluxes, double dt, double h,
                   std::span<double> D, AccessLedger* ledger = nullptr);

/// Q += D, refreshing `previousQ` first when it is non-empty.
void update(std::span<double> Q, std::span<const double> D, std::span<double> previousQ,
            AccessLedger* ledger = nullptr);

constexpr double kDefaultCfl = 0.9;

/// cfl h / (d (2p+1) lambda_max), or nullopt if any node is inadmissible.
std::optional<double> calcTimeStep(const Operators& ops, const PdeSystem& pde, std::span<const double> Q, double h,
                                   double cfl = kDefaultCfl, AccessLedger* ledger = nullptr);

/// Largest signal speed over `count` contiguous states along any axis.
double maxSignalSpeedOver(const PdeSystem& pde, std::span<const double> states, int dims);

enum class Averaging { strict, creeping };

constexpr double kDefaultSafety = 0.99;

struct TimeControl {
  double T = 0.0;
  double dtOld = 0.0;
  double dtNew = 0.0;
  double dtAdm = 0.0;
  double safety = kDefaultSafety;
  double cfl = kDefaultCfl;
  Averaging averaging = Averaging::strict;
  std::optional<double> forcedDt;
  std::optional<double> finalTime;
};

/// dtOld <- dtNew; dtNew <- C dtAdm (strict) or 0.5 (dtOld + C dtAdm) (creeping).
/// A forced step overrides both. Throws NumericalFailure if dtAdm is not positive and finite.
void updateTimeStepSizes(TimeControl& tc);

}  // namespace cadg
