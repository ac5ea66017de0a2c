#include "cadg/ledger.hpp"

namespace cadg {

std::string_view taskName(Task task) {
  switch (task) {
    case Task::predict: return "predict";
    case Task::extrapolate: return "extrapolate";
    case Task::solveRiemann: return "solveRiemann";
    case Task::integrateVolume: return "integrateVolume";
    case Task::integrateFace: return "integrateFace";
    case Task::update: return "update";
    case Task::calcTimeStep: return "calcTimeStep";
  }
  return "unknown";
}

std::string_view phaseName(Phase phase) {
  switch (phase) {
    case Phase::stp: return "STP";
    case Phase::riemann: return "Riemann";
    case Phase::corrector: return "Corrector";
  }
  return "unknown";
}

LedgerSnapshot operator-(const LedgerSnapshot& a, const LedgerSnapshot& b) {
  LedgerSnapshot r;
  for (std::size_t i = 0; i < a.tasks.size(); ++i) {
    r.tasks[i].invocations = a.tasks[i].invocations - b.tasks[i].invocations;
    r.tasks[i].reads = a.tasks[i].reads - b.tasks[i].reads;
    r.tasks[i].writes = a.tasks[i].writes - b.tasks[i].writes;
  }
  r.memoryReads = a.memoryReads - b.memoryReads;
  r.memoryWrites = a.memoryWrites - b.memoryWrites;
  r.solutionReads = a.solutionReads - b.solutionReads;
  r.sweeps = a.sweeps - b.sweeps;
  return r;
}

AccessLedger::AccessLedger(std::size_t cells)
    : perCellSolutionReads_(std::make_unique<std::atomic<std::uint64_t>[]>(cells)), cells_(cells) {
  for (std::size_t i = 0; i < cells; ++i) perCellSolutionReads_[i].store(0);
}

void AccessLedger::charge(Task task, std::uint64_t reads, std::uint64_t writes) {
  auto& c = tasks_[static_cast<std::size_t>(task)];
  c.invocations.fetch_add(1, std::memory_order_relaxed);
  c.reads.fetch_add(reads, std::memory_order_relaxed);
  c.writes.fetch_add(writes, std::memory_order_relaxed);
}

void AccessLedger::chargeMemory(std::uint64_t reads, std::uint64_t writes) {
  memoryReads_.fetch_add(reads, std::memory_order_relaxed);
  memoryWrites_.fetch_add(writes, std::memory_order_relaxed);
}

void AccessLedger::chargeSolutionRead(int cell) {
  solutionReads_.fetch_add(1, std::memory_order_relaxed);
  if (cell >= 0 && static_cast<std::size_t>(cell) < cells_) {
    perCellSolutionReads_[static_cast<std::size_t>(cell)].fetch_add(1, std::memory_order_relaxed);
  }
}

void AccessLedger::countSweep() { sweeps_.fetch_add(1, std::memory_order_relaxed); }

LedgerSnapshot AccessLedger::totals() const {
  LedgerSnapshot s;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    s.tasks[i].invocations = tasks_[i].invocations.load();
    s.tasks[i].reads = tasks_[i].reads.load();
    s.tasks[i].writes = tasks_[i].writes.load();
  }
  s.memoryReads = memoryReads_.load();
  s.memoryWrites = memoryWrites_.load();
  s.solutionReads = solutionReads_.load();
  s.sweeps = sweeps_.load();
  return s;
}

std::uint64_t AccessLedger::solutionReadsOf(int cell) const {
  return perCellSolutionReads_[static_cast<std::size_t>(cell)].load();
}

void AccessLedger::closeStep(long step, int reruns) {
  const LedgerSnapshot now = totals();
  steps_.push_back(StepRecord{step, reruns, now - lastClose_});
  lastClose_ = now;
}

void TaskTrace::append(const TraceRecord& record) {
  if (!enabled_) return;
  std::lock_guard lock(mutex_);
  records_.push_back(record);
}

}  // namespace cadg
