#pragma once

#include <array>
#include <span>
#include <vector>

#include "cadg/kernels.hpp"
#include "cadg/mesh.hpp"
#include "cadg/pde.hpp"

namespace cadg {

/// 1-D projection / reconstruction tables between the nodal basis and 2p+1 subcells.
struct LimiterOps {
  explicit LimiterOps(const Operators& ops);

  int dims;
  int order;
  int n;           // p + 1
  int resolution;  // 2p + 1
  int m;
  std::size_t subcells;
  /// P[s][j]: mean of phi_j over subcell s (resolution x n).
  std::vector<double> projection;
  /// Least-squares lift R = (P^T P)^{-1} P^T (n x resolution).
  std::vector<double> reconstruction;
  /// Subcell index containing each 1-D collocation node.
  std::vector<int> nodeSubcell;
};

constexpr double kFvCfl = 0.9;

FVPatch projectToPatch(const LimiterOps& lops, std::span<const double> Q);

/// Mean-preserving least-squares lift of subcell means to nodal values.
std::vector<double> reconstruct(const LimiterOps& lops, const FVPatch& patch);

/// Component-wise range of a set of states.
struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;

  explicit Bounds(int components = 0);
  void include(std::span<const double> states);
  void include(const Bounds& other);
};

Bounds patchBounds(const FVPatch& patch);

/// Relaxation of the discrete maximum principle: 1e-3 + 1e-2 (hi - lo).
double dmpTolerance(double lo, double hi);

/// Inadmissible nodal or subcell value, or (with bounds) a relaxed DMP violation
/// of the projected subcell values.
bool detectTroubled(const LimiterOps& lops, const PdeSystem& pde, std::span<const double> Q,
                    const Bounds* bounds = nullptr);

/// Neighbour data adjacent to a patch, slot 2*axis+side, one layer of
/// resolution^(d-1) states ordered like face nodes (tangential axes ascending).
struct PatchGhosts {
  std::array<std::vector<double>, 6> layers;
};

/// Boundary layer of the patch on (axis, side).
std::vector<double> edgeLayer(const FVPatch& patch, int axis, int side);

/// Ghost layers of a periodic patch wrapping onto itself.
PatchGhosts periodicGhosts(const FVPatch& patch);

/// Largest stable FV step: cfl hSub / (d lambda_max), lambda over patch and ghosts.
double maxStableFvStep(const PdeSystem& pde, const FVPatch& patch, const PatchGhosts& ghosts, double hSub,
                       double cfl = kFvCfl);

/// One first-order Godunov step with Rusanov fluxes. Throws CflViolation if dt is too large.
void rusanovFVStep(const PdeSystem& pde, FVPatch& patch, const PatchGhosts& ghosts, double dt, double hSub,
                   double cfl = kFvCfl);

/// Time-constant face traces of a patch: every DG face node takes the state of
/// the boundary subcell containing it. Targets indexed by slot 2*axis+side.
void patchHull(const Operators& ops, const LimiterOps& lops, const PdeSystem& pde, const FVPatch& patch,
               std::span<const HullTarget> targets);

}  // namespace cadg
