#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace cadg {

enum class BoundaryKind { periodic, outflow };

/// Which persistent blocks a grid allocates.
///  - threeSweep: Q_h, full space-time predictor, face hull, Riemann output.
///  - hull:       Q_h, D_h, face hull, Riemann output (no space-time volume).
enum class StorageLayout { threeSweep, hull };

enum class TraversalKind { lexicographic, peano };

constexpr std::size_t kDefaultMemoryBudgetBytes = std::size_t{4} << 30;

/// Finite-volume subcell patch of (2p+1)^d states.
struct FVPatch {
  int dims = 0;
  int resolution = 0;
  int components = 0;
  std::vector<double> states;  // [subcell][component], x fastest

  std::size_t subcells() const { return states.size() / static_cast<std::size_t>(components); }
  double* at(std::size_t subcell) { return states.data() + subcell * static_cast<std::size_t>(components); }
  const double* at(std::size_t subcell) const {
    return states.data() + subcell * static_cast<std::size_t>(components);
  }
};

struct Cell {
  std::array<int, 3> index{0, 0, 0};
  /// Face ids; slot 2*axis + side, side 0 = lower, 1 = upper.
  std::array<int, 6> faces{-1, -1, -1, -1, -1, -1};
  std::vector<double> Q;
  std::vector<double> D;
  std::vector<double> previousQ;
  /// Persistent space-time predictor (threeSweep layout only).
  std::vector<double> stp;
  bool troubled = false;
  /// Set when the predictor failed on this cell in the current step.
  bool predictorFailed = false;
  std::optional<FVPatch> patch;
};

/// Face between a minus cell (lower coordinate) and a plus cell.
///
/// Each side carries a hull block (Q*, outward F.n) and its own Riemann
/// result; every block is (p+1) time x (p+1)^(d-1) face nodes x m doubles.
struct Face {
  int axis = 0;
  std::array<int, 2> cells{-1, -1};  // minus, plus; -1 marks a boundary side
  std::array<std::vector<double>, 2> hullQ;
  std::array<std::vector<double>, 2> hullF;
  std::array<std::vector<double>, 2> riemann;
  /// Realisation step whose predictor populated each hull side.
  std::array<long, 2> hullStep{-1, -1};

  bool isBoundary() const { return cells[0] < 0 || cells[1] < 0; }
  int interiorSide() const { return cells[0] >= 0 ? 0 : 1; }
};

struct GridSpec {
  int dims = 2;
  int depth = 1;
  int order = 0;
  int components = 1;
  BoundaryKind boundary = BoundaryKind::periodic;
  StorageLayout layout = StorageLayout::hull;
  bool keepRollbackCopy = false;
  std::size_t memoryBudgetBytes = kDefaultMemoryBudgetBytes;
};

/// Uniform-depth tripartition spacetree over the unit hypercube.
class Grid {
 public:
  explicit Grid(const GridSpec& spec);
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  const GridSpec& spec() const { return spec_; }
  int dims() const { return spec_.dims; }
  int order() const { return spec_.order; }
  int components() const { return spec_.components; }
  int cellsPerAxis() const { return cellsPerAxis_; }
  double meshWidth() const { return 1.0 / cellsPerAxis_; }

  /// m (p+1)^d
  std::size_t cellBlockSize() const { return cellBlock_; }
  /// m (p+1)^(d+1)
  std::size_t spaceTimeBlockSize() const { return cellBlock_ * static_cast<std::size_t>(order() + 1); }

  std::vector<Cell>& cells() { return cells_; }
  const std::vector<Cell>& cells() const { return cells_; }
  std::vector<Face>& faces() { return faces_; }
  const std::vector<Face>& faces() const { return faces_; }
  Cell& cell(int i) { return cells_[static_cast<std::size_t>(i)]; }
  const Cell& cell(int i) const { return cells_[static_cast<std::size_t>(i)]; }
  Face& face(int i) { return faces_[static_cast<std::size_t>(i)]; }
  const Face& face(int i) const { return faces_[static_cast<std::size_t>(i)]; }

  int cellId(const std::array<int, 3>& index) const;
  /// Neighbour across face slot (2*axis+side), or -1 at an outflow boundary.
  int neighbour(int cell, int slot) const;
  /// Which side (0 minus / 1 plus) of face `faceId` the cell sits on.
  int sideOf(int cell, int faceId) const;

  int interiorFaceCount() const;
  int boundaryFaceCount() const;

  /// Doubles held in persistent per-cell and per-face blocks.
  std::size_t persistentDoubles() const;

  // Touch-first face claiming.
  void beginSweep();
  void endSweep();
  bool sweepActive() const { return sweepActive_; }
  std::uint64_t sweepId() const { return sweepId_; }
  /// True exactly once per face per sweep. Atomic test-and-set.
  bool claimFirstTouch(int faceId);

  /// Riemann bookkeeping: step whose solve is stored on the face.
  long riemannStep(int faceId) const { return riemannStep_[static_cast<std::size_t>(faceId)].load(std::memory_order_acquire); }
  void publishRiemann(int faceId, long step) {
    riemannStep_[static_cast<std::size_t>(faceId)].store(step, std::memory_order_release);
  }
  /// Sweep in which the Riemann result was produced (cache-residency model).
  std::uint64_t riemannSweep(int faceId) const {
    return riemannSweep_[static_cast<std::size_t>(faceId)].load(std::memory_order_acquire);
  }
  void markRiemannSweep(int faceId) {
    riemannSweep_[static_cast<std::size_t>(faceId)].store(sweepId_, std::memory_order_release);
  }

  /// Physical position of 1-D reference coordinate `xi` in cell `c` along `axis`.
  double position(int c, int axis, double xi) const;

 private:
  GridSpec spec_;
  int cellsPerAxis_ = 0;
  std::size_t cellBlock_ = 0;
  std::vector<Cell> cells_;
  std::vector<Face> faces_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> claims_;
  std::unique_ptr<std::atomic<long>[]> riemannStep_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> riemannSweep_;
  std::uint64_t sweepId_ = 0;
  bool sweepActive_ = false;
};

/// Builds and zero-initialises a grid. 1 <= L <= 4, d in {2,3}, p in [0,9].
std::unique_ptr<Grid> buildGrid(const GridSpec& spec);

/// Estimated bytes for a grid with this spec.
std::size_t estimateGridBytes(const GridSpec& spec);

/// A permutation of cell ids.
std::vector<int> traversalOrder(const Grid& grid, TraversalKind kind);

/// Peano curve coordinates for a 3^depth per-axis grid, in curve order.
std::vector<std::array<int, 3>> peanoCurve(int dims, int depth);

}  // namespace cadg
