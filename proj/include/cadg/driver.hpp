#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cadg/metrics.hpp"
#include "cadg/scheduler.hpp"

namespace cadg {

enum class SystemKind { euler, advection };

struct RunConfig {
  SystemKind system = SystemKind::euler;
  int dims = 2;
  int depth = 2;
  int order = 3;
  SchedulerMode mode = SchedulerMode::fused;
  TraversalKind traversal = TraversalKind::lexicographic;
  /// Unset: periodic, except outflow for sod.
  std::optional<BoundaryKind> boundary;
  double safety = kDefaultSafety;
  double cfl = kDefaultCfl;
  Averaging averaging = Averaging::strict;
  long steps = 10;
  std::optional<double> finalTime;
  bool limiter = false;
  bool parallel = false;
  int threads = 0;
  std::string scenario = "smooth-density-wave";
  long spikeStep = 3;
  std::string outDir = "out";
  std::optional<double> forcedDt;
  bool trace = false;
  bool injectRerun = false;
  std::size_t memoryBudgetBytes = kDefaultMemoryBudgetBytes;
};

/// Applies one `key = value` setting. Throws ConfigError on unknown keys or bad values.
void applyConfigValue(RunConfig& config, const std::string& key, const std::string& value);
/// Parses `key = value` lines; '#' starts a comment.
RunConfig parseConfig(const std::string& text, RunConfig base = {});
RunConfig loadConfig(const std::filesystem::path& path, RunConfig base = {});
/// Checks every module precondition before anything is allocated.
void validateConfig(const RunConfig& config);

std::string toString(SchedulerMode mode);
std::string toString(SystemKind system);
SchedulerMode parseMode(const std::string& text);

using InitialCondition = std::function<StateVector(std::span<const double> x)>;
using ExactSolution = std::function<std::optional<StateVector>(std::span<const double> x, double t)>;

struct Scenario {
  std::string id;
  BoundaryKind boundary = BoundaryKind::periodic;
  InitialCondition initial;
  ExactSolution exact;  // empty when unknown
  UpdateHook hook;      // empty unless the scenario perturbs the run
};

/// Known ids: uniform, zero, smooth-density-wave, gaussian-advect, sod, speed-spike.
Scenario makeScenario(const std::string& id, SystemKind system, int dims, long spikeStep = 3);

/// Advection velocity used by every advection scenario.
std::vector<double> advectionVelocity(int dims);

std::shared_ptr<PdeSystem> makeSystem(SystemKind system, int dims, const Scenario& scenario);

/// Samples the initial condition at every collocation node.
void initialiseGrid(Grid& grid, const Basis1D& basis, const InitialCondition& initial);

/// Grid spec matching a configuration.
GridSpec gridSpecFor(const RunConfig& config, BoundaryKind boundary);

/// Validated, initialised solver for a configuration.
std::unique_ptr<Solver> makeSolver(const RunConfig& config);

/// L2 error against an exact solution with a (p+3)-point Gauss rule per axis.
double l2Error(const Solver& solver, const ExactSolution& exact);

struct RunSummary {
  long steps = 0;
  double T = 0.0;
  long reruns = 0;
  std::uint64_t sweeps = 0;
  int troubled = 0;
  long inadmissibleStates = 0;
  SingleTouchReport audit;
};

/// Count of inadmissible nodal values (untroubled cells) and subcell states (troubled cells).
long countInadmissible(const Solver& solver);

/// Runs a configuration and writes metrics.csv, solution_final.csv, run.json
/// and, if tracing, trace.csv into config.outDir.
RunSummary runSimulation(const RunConfig& config);

void writeMetricsCsv(const Solver& solver, const std::filesystem::path& path);
void writeSolutionCsv(const Solver& solver, const std::filesystem::path& path);
void writeTraceCsv(const TaskTrace& trace, const std::filesystem::path& path);
void writeRunJson(const RunConfig& config, const Solver& solver, const RunSummary& summary,
                  const std::filesystem::path& path);

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  double error = 0.0;
  std::optional<double> order;
  long steps = 0;
};

/// Smooth advection, fused, T = 0.25. CFL 0.5: at 0.9 the diagonal-advection
/// ADER-DG update is linearly unstable for p >= 1 (thresholds ~0.88/0.84/0.72
/// for p = 1/2/3), which swamps the error on fine grids.
RunConfig convergenceTemplate();

/// Runs the template to its final time on each level and reports L2 errors and
/// observed orders log(e_L / e_{L+1}) / log 3.
std::vector<ConvergenceRow> convergenceStudy(RunConfig config, const std::vector<int>& levels);
void writeConvergenceCsv(const std::vector<ConvergenceRow>& rows, const std::filesystem::path& path);

}  // namespace cadg
