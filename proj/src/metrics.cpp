#include "cadg/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cadg/errors.hpp"

namespace cadg {

namespace {

std::uint64_t upow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw DomainError("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  num = n / (g == 0 ? 1 : g);
  den = d / (g == 0 ? 1 : g);
}

std::string Rational::str() const { return std::to_string(num) + "/" + std::to_string(den); }

std::string Rational::rounded(int digits) const {
  const std::int64_t scale = static_cast<std::int64_t>(upow(10, digits));
  const std::int64_t scaled = (2 * num * scale + den) / (2 * den);
  std::string whole = std::to_string(scaled / scale);
  if (digits <= 0) return whole;
  std::string frac = std::to_string(scaled % scale);
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return whole + "." + frac;
}

bool Rational::operator<=(const Rational& o) const { return num * o.den <= o.num * den; }

std::uint64_t persistentFootprint(SchedulerMode mode, int d, int p, int m) {
  const std::uint64_t M = static_cast<std::uint64_t>(m) * upow(static_cast<std::uint64_t>(p + 1), d);
  const auto dd = static_cast<std::uint64_t>(d);
  if (mode == SchedulerMode::straightforward) {
    return (dd + 1) * M * static_cast<std::uint64_t>(p + 1) + (1 + 6 * dd) * M;
  }
  return (2 + 6 * dd) * M;
}

Rational footprintRatio(int d, int p) {
  return Rational(2 + 6 * d, static_cast<std::int64_t>(d + 1) * (p + 1) + 1 + 6 * d);
}

double trafficModel(SchedulerMode mode, int d, int p, int m, double cRerun) {
  const double M = static_cast<double>(m) * std::pow(p + 1.0, d);
  if (mode == SchedulerMode::straightforward) return (18.0 * d + 4.0) * M;
  return ((4.0 * d + 2.0) * cRerun + 12.0 * d + 1.0) * M;
}

std::uint64_t trafficModelTotal(SchedulerMode mode, int d, int p, int m, std::uint64_t cells, std::uint64_t steps,
                                std::uint64_t reruns) {
  const std::uint64_t M = static_cast<std::uint64_t>(m) * upow(static_cast<std::uint64_t>(p + 1), d);
  const auto dd = static_cast<std::uint64_t>(d);
  if (mode == SchedulerMode::straightforward) return cells * steps * (18 * dd + 4) * M;
  return cells * ((16 * dd + 3) * steps + (4 * dd + 2) * reruns) * M;
}

double rerunUpperBound(double t3steps, double tStp, double tFused, double safety) {
  if (!(t3steps > 0.0 && tStp > 0.0 && tFused > 0.0 && safety > 0.0)) {
    throw DomainError("rerun bound needs positive timings and safety factor");
  }
  if (!(tStp < t3steps)) throw DomainError("rerun bound needs T_STP < T_3steps");
  const long double num = static_cast<long double>(t3steps) * safety - tFused;
  return static_cast<double>(1.0L + num / tStp);
}

LedgerSnapshot stepTotals(const AccessLedger& ledger) {
  LedgerSnapshot total;
  for (const StepRecord& r : ledger.steps()) {
    if (r.step < 1) continue;
    for (std::size_t i = 0; i < total.tasks.size(); ++i) {
      total.tasks[i].invocations += r.traffic.tasks[i].invocations;
      total.tasks[i].reads += r.traffic.tasks[i].reads;
      total.tasks[i].writes += r.traffic.tasks[i].writes;
    }
    total.memoryReads += r.traffic.memoryReads;
    total.memoryWrites += r.traffic.memoryWrites;
    total.solutionReads += r.traffic.solutionReads;
    total.sweeps += r.traffic.sweeps;
  }
  return total;
}

SingleTouchReport singleTouchAudit(const AccessLedger& ledger, std::size_t cells) {
  SingleTouchReport report;
  for (const StepRecord& r : ledger.steps()) {
    if (r.step < 1) continue;
    ++report.steps;
    report.solutionReads += r.traffic.solutionReads;
    report.sweeps += r.traffic.sweeps;
    report.reruns += static_cast<std::uint64_t>(r.reruns);
    report.perStep.push_back(static_cast<double>(r.traffic.solutionReads) / static_cast<double>(cells));
  }
  if (report.steps > 0 && cells > 0) {
    report.readsPerCellPerStep =
        static_cast<double>(report.solutionReads) / (static_cast<double>(cells) * static_cast<double>(report.steps));
  }
  return report;
}

ConcurrencyProfile concurrencyProfile(const TaskTrace& trace) {
  ConcurrencyProfile profile;
  const auto& recs = trace.records();
  std::map<long, Phase> lastPhaseOfStep;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const TraceRecord& r = recs[i];
    if (profile.sweeps.empty() || profile.sweeps.back().sweep != r.sweep) {
      profile.sweeps.push_back(SweepProfile{r.sweep, 0, 0, 0, 1});
    } else {
      const TraceRecord& prev = recs[i - 1];
      SweepProfile& sp = profile.sweeps.back();
      if (prev.phase != r.phase) ++sp.phaseTransitions;
      if (prev.task != r.task) ++sp.taskTransitions;
      if ((prev.phase == Phase::stp) != (r.phase == Phase::stp)) ++sp.stpCorrectBlocks;
    }
    ++profile.sweeps.back().records;
    auto it = lastPhaseOfStep.find(r.step);
    if (it == lastPhaseOfStep.end()) {
      lastPhaseOfStep.emplace(r.step, r.phase);
      profile.stepTransitions.emplace(r.step, 0);
    } else {
      if (it->second != r.phase) ++profile.stepTransitions[r.step];
      it->second = r.phase;
    }
  }
  return profile;
}

TraceValidation validateTrace(const TaskTrace& trace, const Grid& grid) {
  TraceValidation out;
  const std::size_t cells = grid.cells().size();
  const std::size_t faces = grid.faces().size();
  std::vector<long> lastUpdate(cells, 0), lastPredict(cells, 0), lastExtrapolate(cells, 0), lastVolume(cells, 0),
      lastIntegrate(cells, 0);
  std::vector<long> solved(faces, 0);
  std::map<long, std::array<std::size_t, kTaskCount>> counts;

  auto fail = [&](const TraceRecord& r, const std::string& why) {
    out.ok = false;
    if (out.violations.size() < 50) {
      out.violations.push_back(std::string(taskName(r.task)) + "(" + std::to_string(r.entity) + ", step " +
                               std::to_string(r.step) + ", sweep " + std::to_string(r.sweep) + "): " + why);
    }
  };
  auto facesSolved = [&](int cell, long step) {
    const Cell& c = grid.cell(cell);
    for (int slot = 0; slot < 2 * grid.dims(); ++slot) {
      if (solved[static_cast<std::size_t>(c.faces[static_cast<std::size_t>(slot)])] != step) return false;
    }
    return true;
  };

  for (const TraceRecord& r : trace.records()) {
    const auto e = static_cast<std::size_t>(r.entity);
    ++counts[r.step][static_cast<std::size_t>(r.task)];
    switch (r.task) {
      case Task::predict:
        if (lastUpdate[e] != r.step - 1) fail(r, "cell not updated to step " + std::to_string(r.step - 1));
        if (r.step >= 2 && !facesSolved(r.entity, r.step - 1)) fail(r, "hull overwritten before all faces were solved");
        lastPredict[e] = r.step;
        break;
      case Task::extrapolate:
        if (lastPredict[e] != r.step) fail(r, "no preceding predict");
        lastExtrapolate[e] = r.step;
        break;
      case Task::integrateVolume:
        if (lastPredict[e] != r.step) fail(r, "no preceding predict");
        lastVolume[e] = r.step;
        break;
      case Task::solveRiemann: {
        const Face& f = grid.face(r.entity);
        for (int s = 0; s < 2; ++s) {
          const int c = f.cells[static_cast<std::size_t>(s)];
          if (c >= 0 && lastExtrapolate[static_cast<std::size_t>(c)] != r.step) {
            fail(r, "adjacent cell " + std::to_string(c) + " has no prediction for this step");
          }
        }
        if (solved[e] == r.step) fail(r, "face solved twice");
        solved[e] = r.step;
        break;
      }
      case Task::integrateFace:
        if (!facesSolved(r.entity, r.step)) fail(r, "a face is not solved for this step");
        lastIntegrate[e] = r.step;
        break;
      case Task::update:
        if (lastIntegrate[e] != r.step) fail(r, "no preceding integrateFace");
        if (lastVolume[e] != r.step) fail(r, "no preceding integrateVolume");
        lastUpdate[e] = r.step;
        break;
      case Task::calcTimeStep:
        if (lastUpdate[e] != r.step) fail(r, "cell not updated to this step");
        break;
    }
  }
  for (const auto& [step, c] : counts) {
    if (step < 1) continue;
    const auto updates = c[static_cast<std::size_t>(Task::update)];
    if (updates == 0) continue;
    if (updates != cells || c[static_cast<std::size_t>(Task::integrateFace)] != cells ||
        c[static_cast<std::size_t>(Task::calcTimeStep)] != cells) {
      out.ok = false;
      out.violations.push_back("step " + std::to_string(step) + ": corrector task count differs from cell count");
    }
    if (c[static_cast<std::size_t>(Task::solveRiemann)] != faces) {
      out.ok = false;
      out.violations.push_back("step " + std::to_string(step) + ": " +
                               std::to_string(c[static_cast<std::size_t>(Task::solveRiemann)]) +
                               " Riemann solves for " + std::to_string(faces) + " faces");
    }
  }
  return out;
}

}  // namespace cadg
