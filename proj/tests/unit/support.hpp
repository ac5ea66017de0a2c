#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cadg/driver.hpp"

namespace cadg::test {

inline double maxAbsDiff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double maxSolutionDiff(const Solver& a, const Solver& b) {
  double worst = 0.0;
  for (std::size_t c = 0; c < a.grid().cells().size(); ++c) {
    worst = std::max(worst, maxAbsDiff(a.grid().cells()[c].Q, b.grid().cells()[c].Q));
  }
  return worst;
}

/// Small smooth Euler configuration most scheduler tests start from.
inline RunConfig smoothEuler(SchedulerMode mode, int depth = 1, int order = 2) {
  RunConfig c;
  c.system = SystemKind::euler;
  c.dims = 2;
  c.depth = depth;
  c.order = order;
  c.mode = mode;
  c.scenario = "smooth-density-wave";
  return c;
}

/// Uniform Euler state rho=1, j=0, E=2.5.
inline std::vector<double> restState(int dims) {
  std::vector<double> q(static_cast<std::size_t>(dims + 2), 0.0);
  q[0] = 1.0;
  q.back() = 2.5;
  return q;
}

}  // namespace cadg::test

namespace cadg::test {

/// makeSolver with explicit scheduler options (custom orders, threads).
inline std::unique_ptr<Solver> makeSolverWith(const RunConfig& c, SchedulerOptions options) {
  validateConfig(c);
  const Scenario scenario = makeScenario(c.scenario, c.system, c.dims, c.spikeStep);
  auto grid = buildGrid(gridSpecFor(c, c.boundary.value_or(scenario.boundary)));
  initialiseGrid(*grid, makeBasis(c.order), scenario.initial);
  options.mode = c.mode;
  options.limiter = c.limiter;
  options.injectRerunEveryStep = c.injectRerun;
  TimeControl tc;
  tc.safety = c.safety;
  tc.cfl = c.cfl;
  tc.forcedDt = c.forcedDt;
  tc.finalTime = c.finalTime;
  auto solver = std::make_unique<Solver>(std::move(grid), makeSystem(c.system, c.dims, scenario), options, tc);
  if (scenario.hook) solver->setUpdateHook(scenario.hook);
  return solver;
}

}  // namespace cadg::test
