#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cadg/kernels.hpp"
#include "cadg/ledger.hpp"
#include "cadg/limiter.hpp"
#include "cadg/mesh.hpp"
#include "cadg/pde.hpp"

namespace cadg {

enum class SchedulerMode { straightforward, shifted, fused };

/// Persistent layout each mode runs on.
StorageLayout layoutFor(SchedulerMode mode);

struct SchedulerOptions {
  SchedulerMode mode = SchedulerMode::fused;
  TraversalKind traversal = TraversalKind::lexicographic;
  /// Overrides `traversal` when non-empty; must be a permutation of cell ids.
  std::vector<int> customOrder;
  bool parallel = false;
  /// Worker count in parallel mode; 0 picks max(2, hardware threads).
  int threads = 0;
  bool limiter = false;
  bool trace = false;
  /// Test hook: take the rerun branch in every fused step even if the guess held.
  bool injectRerunEveryStep = false;
};

/// Invoked right after a cell's update of realisation step `step`.
using UpdateHook = std::function<void(long step, int cell, Grid& grid, const Operators& ops)>;

struct StepReport {
  long step = 0;
  double T = 0.0;
  double dtOld = 0.0;  // step size this realisation step advanced by
  double dtNew = 0.0;  // guess for the next step
  double dtAdm = 0.0;
  int reruns = 0;
  int sweeps = 0;
  int troubled = 0;
  double wallSeconds = 0.0;
};

/// Runs realisation steps of one scheduler mode over a grid.
///
/// Shifted and fused modes fold their priming sweep (dtOld = 0) into the first
/// call of step(); the ledger books that sweep as step 0.
class Solver {
 public:
  Solver(std::unique_ptr<Grid> grid, std::shared_ptr<const PdeSystem> pde, SchedulerOptions options,
         TimeControl timeControl);
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  void setUpdateHook(UpdateHook hook) { hook_ = std::move(hook); }

  /// One realisation step. Throws NumericalFailure on unrecoverable states.
  StepReport step();
  /// Runs `steps` steps or until the final time is reached.
  void run(long steps);
  bool finished() const;

  Grid& grid() { return *grid_; }
  const Grid& grid() const { return *grid_; }
  const PdeSystem& pde() const { return *pde_; }
  const Operators& operators() const { return ops_; }
  const LimiterOps& limiterOperators() const { return lops_; }
  const SchedulerOptions& options() const { return options_; }
  const TimeControl& timeControl() const { return tc_; }
  const AccessLedger& ledger() const { return ledger_; }
  const TaskTrace& trace() const { return trace_; }
  const std::vector<int>& order() const { return order_; }
  const std::vector<StepReport>& history() const { return history_; }
  long stepsCompleted() const { return completed_; }
  long totalReruns() const { return totalReruns_; }
  std::uint64_t sweeps() const { return grid_->sweepId(); }
  int troubledCount() const;

 private:
  StepReport stepStraightforward();
  StepReport stepShifted();
  StepReport stepFused();
  void primingSweep();

  void runStp(int cell, double dt, long step, bool volumeIntoD, bool solutionHot);
  void solveFace(int face, long step);
  void correct(int cell, double dt, long step);
  void claimAndSolve(int cell, long step);
  void awaitFaces(int cell, long step);
  /// Returns cells whose time-T+dt representation changed.
  std::vector<int> limiterPass(long step, double dt);

  template <typename Fn>
  void forEachCell(Fn&& fn);
  std::array<HullTarget, 6> hullTargets(int cell);
  double minCandidate() const;
  double clipToFinal(double dt, double from) const;

  std::unique_ptr<Grid> grid_;
  std::shared_ptr<const PdeSystem> pde_;
  SchedulerOptions options_;
  TimeControl tc_;
  Operators ops_;
  LimiterOps lops_;
  AccessLedger ledger_;
  TaskTrace trace_;
  std::vector<int> order_;
  std::vector<double> candidate_;
  std::vector<char> candidateInadmissible_;
  std::vector<StepReport> history_;
  UpdateHook hook_;
  bool primed_ = false;
  double stpDt_ = 0.0;
  long completed_ = 0;
  long totalReruns_ = 0;
  int threads_ = 1;
};

}  // namespace cadg
