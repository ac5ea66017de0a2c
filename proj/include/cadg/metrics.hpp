#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cadg/ledger.hpp"
#include "cadg/mesh.hpp"
#include "cadg/scheduler.hpp"

namespace cadg {

/// Exact non-negative fraction in lowest terms.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  /// Decimal rounding to `digits` places using integer arithmetic (half up).
  std::string rounded(int digits) const;
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator<=(const Rational& o) const;
};

/// Persistent doubles per cell: straightforward keeps the whole space-time
/// predictor, the fused/shifted layout only the space-time hull and D.
std::uint64_t persistentFootprint(SchedulerMode mode, int d, int p, int m);

/// Fused over straightforward footprint, (2+6d) / ((d+1)(p+1) + 1 + 6d).
Rational footprintRatio(int d, int p);

/// Expected main-memory doubles per cell per realisation step under the cache
/// model: straightforward (18d+4) M, fused ((4d+2) C_rerun + 12d + 1) M.
double trafficModel(SchedulerMode mode, int d, int p, int m, double cRerun = 1.0);

/// Integer form for a whole run: `reruns` rerun sweeps over `steps` steps.
std::uint64_t trafficModelTotal(SchedulerMode mode, int d, int p, int m, std::uint64_t cells, std::uint64_t steps,
                                std::uint64_t reruns = 0);

/// Break-even rerun rate 1 + (T3 C - Tfused) / Tstp.
double rerunUpperBound(double t3steps, double tStp, double tFused, double safety);

struct SingleTouchReport {
  long steps = 0;
  std::uint64_t solutionReads = 0;
  /// Amortised solution-record reads per cell per realisation step.
  double readsPerCellPerStep = 0.0;
  std::vector<double> perStep;
  std::uint64_t sweeps = 0;
  std::uint64_t reruns = 0;
};

/// Audit over realisation steps >= 1 (the priming sweep is excluded).
SingleTouchReport singleTouchAudit(const AccessLedger& ledger, std::size_t cells);

/// Totals of realisation steps >= 1.
LedgerSnapshot stepTotals(const AccessLedger& ledger);

struct SweepProfile {
  std::uint64_t sweep = 0;
  std::size_t records = 0;
  int phaseTransitions = 0;
  int taskTransitions = 0;
  /// Contiguous blocks when phases are split into {STP} and {Riemann, Corrector}.
  int stpCorrectBlocks = 0;
};

struct ConcurrencyProfile {
  std::vector<SweepProfile> sweeps;
  /// Phase transitions among the records of each realisation step.
  std::map<long, int> stepTransitions;
};

ConcurrencyProfile concurrencyProfile(const TaskTrace& trace);

struct TraceValidation {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Replays a trace against the STP -> Riemann -> Corrector partial order.
TraceValidation validateTrace(const TaskTrace& trace, const Grid& grid);

}  // namespace cadg
