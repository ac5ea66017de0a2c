#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

namespace cadg {

enum class Task : int { predict = 0, extrapolate, solveRiemann, integrateVolume, integrateFace, update, calcTimeStep };
constexpr int kTaskCount = 7;
constexpr std::array<Task, kTaskCount> kAllTasks{Task::predict,         Task::extrapolate,   Task::solveRiemann,
                                                 Task::integrateVolume, Task::integrateFace, Task::update,
                                                 Task::calcTimeStep};

std::string_view taskName(Task task);

struct TaskTraffic {
  std::uint64_t invocations = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
};

/// Counter values at one instant, or the difference between two instants.
struct LedgerSnapshot {
  std::array<TaskTraffic, kTaskCount> tasks{};
  /// Main-memory traffic under the cache model (see TrafficMeter).
  std::uint64_t memoryReads = 0;
  std::uint64_t memoryWrites = 0;
  /// Cold loads of a cell's solution record.
  std::uint64_t solutionReads = 0;
  std::uint64_t sweeps = 0;

  const TaskTraffic& operator[](Task t) const { return tasks[static_cast<std::size_t>(t)]; }
  std::uint64_t memoryTotal() const { return memoryReads + memoryWrites; }
};

LedgerSnapshot operator-(const LedgerSnapshot& a, const LedgerSnapshot& b);

struct StepRecord {
  long step = 0;
  int reruns = 0;
  LedgerSnapshot traffic;
};

/// Exact double-precision traffic counters.
///
/// Two layers are kept: per-task logical traffic (what each task reads and
/// writes at its boundary) and main-memory traffic under the cache model that
/// the scheduler charges per step group. All appenders are lock-free.
class AccessLedger {
 public:
  explicit AccessLedger(std::size_t cells = 0);

  void charge(Task task, std::uint64_t reads, std::uint64_t writes);
  void chargeMemory(std::uint64_t reads, std::uint64_t writes);
  void chargeSolutionRead(int cell);
  void countSweep();

  LedgerSnapshot totals() const;
  std::uint64_t solutionReadsOf(int cell) const;

  /// Closes a realisation step; its record holds the delta since the last close.
  void closeStep(long step, int reruns);
  const std::vector<StepRecord>& steps() const { return steps_; }

 private:
  struct Counters {
    std::atomic<std::uint64_t> invocations{0};
    std::atomic<std::uint64_t> reads{0};
    std::atomic<std::uint64_t> writes{0};
  };
  std::array<Counters, kTaskCount> tasks_;
  std::atomic<std::uint64_t> memoryReads_{0};
  std::atomic<std::uint64_t> memoryWrites_{0};
  std::atomic<std::uint64_t> solutionReads_{0};
  std::atomic<std::uint64_t> sweeps_{0};
  std::unique_ptr<std::atomic<std::uint64_t>[]> perCellSolutionReads_;
  std::size_t cells_ = 0;
  LedgerSnapshot lastClose_{};
  std::vector<StepRecord> steps_;
};

/// Step a task is logically grouped under.
enum class Phase : int { stp = 0, riemann, corrector };
std::string_view phaseName(Phase phase);

struct TraceRecord {
  std::uint64_t sweep = 0;
  long step = 0;
  Task task = Task::predict;
  Phase phase = Phase::stp;
  int entity = 0;  // cell id, or face id for solveRiemann
};

/// Ordered record of executed tasks. Appends are serialised by a mutex.
class TaskTrace {
 public:
  explicit TaskTrace(bool enabled = true) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  void append(const TraceRecord& record);
  const std::vector<TraceRecord>& records() const { return records_; }
  void clear() { records_.clear(); }

 private:
  bool enabled_;
  std::mutex mutex_;
  std::vector<TraceRecord> records_;
};

}  // namespace cadg
