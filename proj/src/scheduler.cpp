#include "cadg/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "cadg/errors.hpp"

namespace cadg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Face side a cell occupies through its slot: a lower face has the cell on its plus side.
int sideForSlot(int slot) { return 1 - slot % 2; }

}  // namespace

StorageLayout layoutFor(SchedulerMode mode) {
  return mode == SchedulerMode::straightforward ? StorageLayout::threeSweep : StorageLayout::hull;
}

Solver::Solver(std::unique_ptr<Grid> grid, std::shared_ptr<const PdeSystem> pde, SchedulerOptions options,
               TimeControl timeControl)
    : grid_(std::move(grid)),
      pde_(std::move(pde)),
      options_(std::move(options)),
      tc_(timeControl),
      ops_(grid_->dims(), grid_->order(), grid_->components()),
      lops_(ops_),
      ledger_(grid_->cells().size()),
      trace_(options_.trace) {
  if (pde_->dimensions() != grid_->dims() || pde_->components() != grid_->components()) {
    throw ConfigError("PDE system does not match the grid's dimension/component count");
  }
  if (grid_->spec().layout != layoutFor(options_.mode)) {
    throw ConfigError("grid storage layout does not match the scheduler mode");
  }
  if (options_.limiter && !grid_->spec().keepRollbackCopy) {
    throw ConfigError("the limiter needs a grid with a rollback copy");
  }
  if (options_.parallel && options_.mode == SchedulerMode::shifted) {
    throw ConfigError("parallel traversal is available for the fused and straightforward modes only");
  }
  if (!(tc_.safety > 0.0 && tc_.safety <= 1.0)) throw ConfigError("safety factor must lie in (0, 1]");
  if (!(tc_.cfl > 0.0)) throw ConfigError("CFL constant must be positive");
  if (tc_.forcedDt && !(*tc_.forcedDt > 0.0)) throw ConfigError("forced time step must be positive");

  const std::size_t cells = grid_->cells().size();
  if (!options_.customOrder.empty()) {
    std::vector<int> sorted = options_.customOrder;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> ids(cells);
    std::iota(ids.begin(), ids.end(), 0);
    if (sorted != ids) throw ConfigError("custom traversal order is not a permutation of the cells");
    order_ = options_.customOrder;
  } else {
    order_ = traversalOrder(*grid_, options_.traversal);
  }
  if (options_.parallel) {
    threads_ = options_.threads > 0 ? options_.threads
                                    : std::max(2, static_cast<int>(std::thread::hardware_concurrency()));
  }

  candidate_.assign(cells, kInf);
  candidateInadmissible_.assign(cells, 0);
  const double h = grid_->meshWidth();
  for (std::size_t c = 0; c < cells; ++c) {
    const auto dt = calcTimeStep(ops_, *pde_, grid_->cells()[c].Q, h, tc_.cfl);
    if (!dt) throw NumericalFailure("initial data is inadmissible in cell " + std::to_string(c), 0);
    candidate_[c] = *dt;
  }
  tc_.dtAdm = minCandidate();
  tc_.dtOld = 0.0;
  if (tc_.forcedDt) {
    tc_.dtNew = *tc_.forcedDt;
  } else {
    if (!(tc_.dtAdm > 0.0) || !std::isfinite(tc_.dtAdm)) {
      throw NumericalFailure("initial admissible time step is not positive and finite", 0);
    }
    tc_.dtNew = tc_.safety * tc_.dtAdm;
  }
}

int Solver::troubledCount() const {
  int count = 0;
  for (const Cell& c : grid_->cells()) count += c.troubled ? 1 : 0;
  return count;
}

bool Solver::finished() const {
  return tc_.finalTime && tc_.T >= *tc_.finalTime - 1e-14 * std::max(1.0, *tc_.finalTime);
}

double Solver::clipToFinal(double dt, double from) const {
  if (!tc_.finalTime) return dt;
  return std::max(0.0, std::min(dt, *tc_.finalTime - from));
}

double Solver::minCandidate() const {
  double m = kInf;
  for (double c : candidate_) m = std::min(m, c);
  return m;
}

template <typename Fn>
void Solver::forEachCell(Fn&& fn) {
  if (!options_.parallel) {
    for (int c : order_) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  std::mutex errorMutex;
  auto worker = [&] {
    try {
      while (!abort.load(std::memory_order_relaxed)) {
        const std::size_t k = next.fetch_add(1);
        if (k >= order_.size()) break;
        fn(order_[k]);
      }
    } catch (...) {
      std::lock_guard lock(errorMutex);
      if (!error) error = std::current_exception();
      abort.store(true);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads_; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

std::array<HullTarget, 6> Solver::hullTargets(int cell) {
  std::array<HullTarget, 6> targets{};
  const Cell& c = grid_->cell(cell);
  for (int slot = 0; slot < 2 * grid_->dims(); ++slot) {
    Face& f = grid_->face(c.faces[static_cast<std::size_t>(slot)]);
    const auto side = static_cast<std::size_t>(sideForSlot(slot));
    targets[static_cast<std::size_t>(slot)] = HullTarget{f.hullQ[side], f.hullF[side]};
  }
  return targets;
}

void Solver::runStp(int cell, double dt, long step, bool volumeIntoD, bool solutionHot) {
  Cell& c = grid_->cell(cell);
  const double h = grid_->meshWidth();
  const int d = grid_->dims();
  const std::size_t M = ops_.cellBlock;
  const auto targets = hullTargets(cell);
  const std::span<const HullTarget> slots(targets.data(), static_cast<std::size_t>(2 * d));

  thread_local std::vector<double> scratch;
  std::span<double> stp;
  if (grid_->spec().layout == StorageLayout::threeSweep) {
    stp = c.stp;
  } else {
    scratch.resize(ops_.predictorSize());
    stp = scratch;
  }

  trace_.append({grid_->sweepId(), step, Task::predict, Phase::stp, cell});
  std::optional<FVPatch> temporary;
  const FVPatch* patch = c.troubled && c.patch ? &*c.patch : nullptr;
  if (patch == nullptr) {
    try {
      predict(ops_, *pde_, c.Q, dt, h, stp, &ledger_, cell);
    } catch (const PredictorFailure& e) {
      if (!options_.limiter) throw NumericalFailure(e.what(), step);
      c.predictorFailed = true;
      temporary = projectToPatch(lops_, c.Q);
      patch = &*temporary;
    }
  }
  trace_.append({grid_->sweepId(), step, Task::extrapolate, Phase::stp, cell});
  if (patch != nullptr) {
    // Patch-backed cells publish time-constant traces of their subcell states.
    ledger_.charge(Task::predict, M, ops_.predictorSize());
    patchHull(ops_, lops_, *pde_, *patch, slots);
    ledger_.charge(Task::extrapolate, ops_.predictorSize(), 4 * static_cast<std::size_t>(d) * M);
    if (grid_->spec().layout == StorageLayout::threeSweep) std::fill(stp.begin(), stp.end(), 0.0);
  } else {
    extrapolate(ops_, stp, slots, &ledger_);
  }
  for (int slot = 0; slot < 2 * d; ++slot) {
    grid_->face(c.faces[static_cast<std::size_t>(slot)]).hullStep[static_cast<std::size_t>(sideForSlot(slot))] = step;
  }
  if (volumeIntoD) {
    trace_.append({grid_->sweepId(), step, Task::integrateVolume, Phase::stp, cell});
    if (patch != nullptr) {
      std::fill(c.D.begin(), c.D.end(), 0.0);
      ledger_.charge(Task::integrateVolume, static_cast<std::size_t>(d) * ops_.spaceTimeBlock, M);
    } else {
      integrateVolume(ops_, stp, dt, h, c.D, &ledger_);
    }
  }
  // Cache model: one cold read of the solution record unless it is still hot from
  // this visit's update; the hull and the volume image go back to memory.
  if (!solutionHot) ledger_.chargeSolutionRead(cell);
  ledger_.chargeMemory(solutionHot ? 0 : M, static_cast<std::uint64_t>(4 * d + 1) * M);
}

void Solver::solveFace(int faceId, long step) {
  Face& f = grid_->face(faceId);
  solveRiemann(ops_, *pde_, f, step, &ledger_);
  grid_->markRiemannSweep(faceId);
  trace_.append({grid_->sweepId(), step, Task::solveRiemann, Phase::riemann, faceId});
  const std::uint64_t adjacent = f.isBoundary() ? 1 : 2;
  ledger_.chargeMemory(adjacent * 4 * ops_.cellBlock, adjacent * 2 * ops_.cellBlock);
  grid_->publishRiemann(faceId, step);
}

void Solver::claimAndSolve(int cell, long step) {
  const Cell& c = grid_->cell(cell);
  for (int slot = 0; slot < 2 * grid_->dims(); ++slot) {
    const int f = c.faces[static_cast<std::size_t>(slot)];
    if (grid_->claimFirstTouch(f)) solveFace(f, step);
  }
}

void Solver::awaitFaces(int cell, long step) {
  const Cell& c = grid_->cell(cell);
  for (int slot = 0; slot < 2 * grid_->dims(); ++slot) {
    const int f = c.faces[static_cast<std::size_t>(slot)];
    while (grid_->riemannStep(f) != step) {
      if (!options_.parallel) {
        throw SchedulingError("integrateFace: face " + std::to_string(f) + " holds the Riemann result of step " +
                              std::to_string(grid_->riemannStep(f)) + ", expected " + std::to_string(step));
      }
      std::this_thread::yield();
    }
  }
}

void Solver::correct(int cell, double dt, long step) {
  Cell& c = grid_->cell(cell);
  const double h = grid_->meshWidth();
  const int d = grid_->dims();
  const std::size_t M = ops_.cellBlock;

  thread_local std::vector<double> scratchD;
  std::span<double> D;
  if (grid_->spec().layout == StorageLayout::threeSweep) {
    scratchD.resize(M);
    D = scratchD;
    trace_.append({grid_->sweepId(), step, Task::integrateVolume, Phase::corrector, cell});
    if (c.troubled && c.patch) {
      std::fill(D.begin(), D.end(), 0.0);
      ledger_.charge(Task::integrateVolume, static_cast<std::size_t>(d) * ops_.spaceTimeBlock, M);
    } else {
      integrateVolume(ops_, c.stp, dt, h, D, &ledger_);
    }
  } else {
    D = c.D;
  }

  for (int slot = 0; slot < 2 * d; ++slot) {
    const int f = c.faces[static_cast<std::size_t>(slot)];
    if (grid_->riemannStep(f) != step) {
      throw SchedulingError("integrateFace: face " + std::to_string(f) + " was not solved for step " +
                            std::to_string(step));
    }
  }
  std::array<std::span<const double>, 6> fluxes{};
  std::uint64_t faceReads = 0;
  for (int slot = 0; slot < 2 * d; ++slot) {
    const int f = c.faces[static_cast<std::size_t>(slot)];
    fluxes[static_cast<std::size_t>(slot)] = grid_->face(f).riemann[static_cast<std::size_t>(sideForSlot(slot))];
    if (grid_->riemannSweep(f) != grid_->sweepId()) faceReads += M;
  }
  trace_.append({grid_->sweepId(), step, Task::integrateFace, Phase::corrector, cell});
  integrateFace(ops_, std::span<const std::span<const double>>(fluxes.data(), static_cast<std::size_t>(2 * d)), dt,
                h, D, &ledger_);

  trace_.append({grid_->sweepId(), step, Task::update, Phase::corrector, cell});
  update(c.Q, D, c.previousQ, &ledger_);
  ledger_.chargeSolutionRead(cell);
  ledger_.chargeMemory(M + faceReads, M);
  if (hook_) hook_(step, cell, *grid_, ops_);

  trace_.append({grid_->sweepId(), step, Task::calcTimeStep, Phase::corrector, cell});
  const auto dtCell = calcTimeStep(ops_, *pde_, c.Q, h, tc_.cfl, &ledger_);
  const auto idx = static_cast<std::size_t>(cell);
  if (dtCell) {
    candidate_[idx] = *dtCell;
    candidateInadmissible_[idx] = 0;
  } else if (options_.limiter) {
    candidate_[idx] = kInf;
    candidateInadmissible_[idx] = 1;
  } else {
    throw NumericalFailure("inadmissible state in cell " + std::to_string(cell), step);
  }
}

std::vector<int> Solver::limiterPass(long step, double dt) {
  std::vector<int> changed;
  if (!options_.limiter) return changed;
  auto& cells = grid_->cells();
  const std::size_t count = cells.size();
  const int d = grid_->dims();
  const int m = grid_->components();
  const double h = grid_->meshWidth();

  // Time-T representation bounds of every cell.
  std::vector<Bounds> repr(count, Bounds(m));
  for (std::size_t c = 0; c < count; ++c) {
    if (cells[c].troubled && cells[c].patch) {
      repr[c] = patchBounds(*cells[c].patch);
    } else {
      repr[c] = patchBounds(projectToPatch(lops_, cells[c].previousQ));
    }
  }
  std::vector<char> flagged(count, 0);
  for (std::size_t c = 0; c < count; ++c) {
    if (cells[c].troubled) continue;
    Bounds b = repr[c];
    for (int slot = 0; slot < 2 * d; ++slot) {
      const int nb = grid_->neighbour(static_cast<int>(c), slot);
      if (nb >= 0) b.include(repr[static_cast<std::size_t>(nb)]);
    }
    flagged[c] = cells[c].predictorFailed || candidateInadmissible_[c] != 0 ||
                 detectTroubled(lops_, *pde_, cells[c].Q, &b);
  }
  std::vector<int> active;
  for (std::size_t c = 0; c < count; ++c) {
    Cell& cell = cells[c];
    cell.predictorFailed = false;
    if (flagged[c]) {
      // Rollback: the FV path restarts from the time-T solution.
      std::copy(cell.previousQ.begin(), cell.previousQ.end(), cell.Q.begin());
      cell.patch = projectToPatch(lops_, cell.previousQ);
      cell.troubled = true;
    }
    if (cell.troubled) active.push_back(static_cast<int>(c));
  }
  if (active.empty()) return changed;

  // Coupling halo: frozen time-T patches of untroubled face neighbours.
  std::vector<std::optional<FVPatch>> halo(count);
  for (int c : active) {
    for (int slot = 0; slot < 2 * d; ++slot) {
      const int nb = grid_->neighbour(c, slot);
      if (nb < 0) continue;
      const auto k = static_cast<std::size_t>(nb);
      if (!cells[k].troubled && !halo[k]) halo[k] = projectToPatch(lops_, cells[k].previousQ);
    }
  }
  auto patchOf = [&](int c) -> const FVPatch& {
    const auto k = static_cast<std::size_t>(c);
    return cells[k].troubled ? *cells[k].patch : *halo[k];
  };
  auto ghostsOf = [&](int c) {
    PatchGhosts g;
    for (int slot = 0; slot < 2 * d; ++slot) {
      const int axis = slot / 2;
      const int side = slot % 2;
      const int nb = grid_->neighbour(c, slot);
      g.layers[static_cast<std::size_t>(slot)] =
          nb < 0 ? edgeLayer(patchOf(c), axis, side) : edgeLayer(patchOf(nb), axis, 1 - side);
    }
    return g;
  };

  const double hSub = h / lops_.resolution;
  int substeps = 1;
  if (dt > 0.0) {
    for (int c : active) {
      const double limit = maxStableFvStep(*pde_, patchOf(c), ghostsOf(c), hSub);
      substeps = std::max(substeps, static_cast<int>(std::ceil(dt / limit)));
    }
    const double sub = dt / substeps;
    for (int k = 0; k < substeps; ++k) {
      std::vector<PatchGhosts> ghosts;
      ghosts.reserve(active.size());
      for (int c : active) ghosts.push_back(ghostsOf(c));
      for (std::size_t i = 0; i < active.size(); ++i) {
        rusanovFVStep(*pde_, *cells[static_cast<std::size_t>(active[i])].patch, ghosts[i], sub, hSub, 1.0);
      }
    }
  }

  const auto mm = static_cast<std::size_t>(m);
  for (int c : active) {
    Cell& cell = cells[static_cast<std::size_t>(c)];
    std::vector<double> lift = reconstruct(lops_, *cell.patch);
    const Bounds own = patchBounds(*cell.patch);
    if (!detectTroubled(lops_, *pde_, lift, &own)) {
      cell.Q = std::move(lift);
      cell.troubled = false;
      cell.patch.reset();
      const auto dtCell = calcTimeStep(ops_, *pde_, cell.Q, h, tc_.cfl);
      candidate_[static_cast<std::size_t>(c)] = dtCell ? *dtCell : kInf;
    } else {
      bool admissible = true;
      for (std::size_t k = 0; k < lift.size(); k += mm) {
        admissible = admissible && pde_->isAdmissible(std::span<const double>(lift.data() + k, mm));
      }
      if (admissible) {
        cell.Q = std::move(lift);
      } else {
        // Fall back to the patch mean, which is admissible for convex admissible sets.
        std::vector<double> mean(mm, 0.0);
        const std::size_t subs = cell.patch->subcells();
        for (std::size_t s = 0; s < subs; ++s) {
          for (std::size_t v = 0; v < mm; ++v) mean[v] += cell.patch->at(s)[v] / static_cast<double>(subs);
        }
        for (std::size_t k = 0; k < cell.Q.size(); k += mm) std::copy(mean.begin(), mean.end(), cell.Q.begin() + static_cast<std::ptrdiff_t>(k));
      }
      const double lambda = maxSignalSpeedOver(*pde_, cell.patch->states, d);
      candidate_[static_cast<std::size_t>(c)] = tc_.cfl * h / (d * (2 * grid_->order() + 1) * lambda);
    }
    candidateInadmissible_[static_cast<std::size_t>(c)] = 0;
    changed.push_back(c);
  }
  (void)step;
  return changed;
}

void Solver::primingSweep() {
  grid_->beginSweep();
  ledger_.countSweep();
  const double h = grid_->meshWidth();
  forEachCell([&](int cell) {
    trace_.append({grid_->sweepId(), 0, Task::calcTimeStep, Phase::corrector, cell});
    const auto dtCell = calcTimeStep(ops_, *pde_, grid_->cell(cell).Q, h, tc_.cfl, &ledger_);
    candidate_[static_cast<std::size_t>(cell)] = dtCell ? *dtCell : kInf;
    if (options_.mode == SchedulerMode::fused) runStp(cell, stpDt_, 1, true, true);
  });
  if (options_.mode == SchedulerMode::shifted) {
    forEachCell([&](int cell) { runStp(cell, stpDt_, 1, true, false); });
  }
  grid_->endSweep();
  tc_.dtAdm = minCandidate();
  ledger_.closeStep(0, 0);
  primed_ = true;
}

StepReport Solver::step() {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t sweepsBefore = grid_->sweepId();
  StepReport report;
  try {
    switch (options_.mode) {
      case SchedulerMode::straightforward: report = stepStraightforward(); break;
      case SchedulerMode::shifted: report = stepShifted(); break;
      case SchedulerMode::fused: report = stepFused(); break;
    }
  } catch (const NumericalFailure& e) {
    if (e.step() >= 0) throw;
    throw NumericalFailure(e.what(), completed_ + 1);
  } catch (const CflViolation& e) {
    throw NumericalFailure(e.what(), completed_ + 1);
  }
  report.sweeps = static_cast<int>(grid_->sweepId() - sweepsBefore);
  report.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.troubled = troubledCount();
  history_.push_back(report);
  return report;
}

void Solver::run(long steps) {
  for (long i = 0; i < steps && !finished(); ++i) step();
}

StepReport Solver::stepStraightforward() {
  const long n = completed_ + 1;
  const double dt = clipToFinal(tc_.dtNew, tc_.T);
  tc_.dtNew = dt;

  grid_->beginSweep();
  ledger_.countSweep();
  forEachCell([&](int cell) { runStp(cell, dt, n, false, false); });
  grid_->endSweep();

  grid_->beginSweep();
  ledger_.countSweep();
  forEachCell([&](int cell) { claimAndSolve(cell, n); });
  grid_->endSweep();

  grid_->beginSweep();
  ledger_.countSweep();
  forEachCell([&](int cell) { correct(cell, dt, n); });
  grid_->endSweep();

  limiterPass(n, dt);
  tc_.T += dt;
  tc_.dtAdm = minCandidate();
  updateTimeStepSizes(tc_);
  completed_ = n;
  ledger_.closeStep(n, 0);
  return StepReport{n, tc_.T, tc_.dtOld, tc_.dtNew, tc_.dtAdm, 0, 0, 0, 0.0};
}

StepReport Solver::stepShifted() {
  if (!primed_) {
    stpDt_ = clipToFinal(tc_.dtNew, tc_.T);
    primingSweep();
  }
  const long n = completed_ + 1;
  const double dt = stpDt_;

  grid_->beginSweep();
  ledger_.countSweep();
  forEachCell([&](int cell) { claimAndSolve(cell, n); });
  forEachCell([&](int cell) { correct(cell, dt, n); });
  limiterPass(n, dt);
  tc_.T += dt;
  tc_.dtAdm = minCandidate();
  tc_.dtNew = dt;
  updateTimeStepSizes(tc_);
  tc_.dtNew = clipToFinal(tc_.dtNew, tc_.T);
  stpDt_ = tc_.dtNew;
  forEachCell([&](int cell) { runStp(cell, stpDt_, n + 1, true, false); });
  grid_->endSweep();

  completed_ = n;
  ledger_.closeStep(n, 0);
  return StepReport{n, tc_.T, tc_.dtOld, tc_.dtNew, tc_.dtAdm, 0, 0, 0, 0.0};
}

StepReport Solver::stepFused() {
  if (!primed_) {
    stpDt_ = clipToFinal(tc_.dtNew, tc_.T);
    primingSweep();
  }
  const long n = completed_ + 1;

  // Optimistic guess check: were the step-n predictions run with too large a step?
  int reruns = 0;
  const bool violated = !tc_.forcedDt && tc_.dtAdm < stpDt_;
  if (violated || options_.injectRerunEveryStep) {
    if (violated) {
      stpDt_ = clipToFinal(tc_.safety * tc_.dtAdm, tc_.T);
      tc_.dtOld = stpDt_;
      tc_.dtNew = stpDt_;
    }
    grid_->beginSweep();
    ledger_.countSweep();
    forEachCell([&](int cell) { runStp(cell, stpDt_, n, true, false); });
    grid_->endSweep();
    ++reruns;
  }
  if (reruns > 1) throw SchedulingError("more than one rerun within a realisation step");

  const double dt = stpDt_;
  tc_.dtNew = dt;
  updateTimeStepSizes(tc_);
  const double next = clipToFinal(tc_.dtNew, tc_.T + dt);
  tc_.dtNew = next;

  grid_->beginSweep();
  ledger_.countSweep();
  forEachCell([&](int cell) {
    claimAndSolve(cell, n);
    awaitFaces(cell, n);
    correct(cell, dt, n);
    runStp(cell, next, n + 1, true, true);
  });
  grid_->endSweep();

  const std::vector<int> changed = limiterPass(n, dt);
  if (!changed.empty()) {
    // Limited cells publish fresh predictions for n+1 (not a grid sweep).
    for (int cell : changed) runStp(cell, next, n + 1, true, false);
  }
  tc_.T += dt;
  tc_.dtAdm = minCandidate();
  stpDt_ = next;
  completed_ = n;
  totalReruns_ += reruns;
  ledger_.closeStep(n, reruns);
  return StepReport{n, tc_.T, dt, next, tc_.dtAdm, reruns, 0, 0, 0.0};
}

}  // namespace cadg
