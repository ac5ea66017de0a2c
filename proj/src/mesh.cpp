#include "cadg/mesh.hpp"

#include <numeric>
#include <string>

#include "cadg/errors.hpp"

namespace cadg {

namespace {

int ipow(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void validate(const GridSpec& spec) {
  if (spec.dims != 2 && spec.dims != 3) throw ConfigError("grid dimension must be 2 or 3");
  if (spec.depth < 1 || spec.depth > 4) throw ConfigError("grid depth L must lie in [1, 4]");
  if (spec.order < 0 || spec.order > 9) throw ConfigError("polynomial order p must lie in [0, 9]");
  if (spec.components < 1) throw ConfigError("component count m must be positive");
}

int faceCount(const GridSpec& spec) {
  const int n = ipow(3, spec.depth);
  const int cells = ipow(n, spec.dims);
  const int perAxis = spec.boundary == BoundaryKind::periodic ? cells : cells + cells / n;
  return spec.dims * perAxis;
}

}  // namespace

std::size_t estimateGridBytes(const GridSpec& spec) {
  validate(spec);
  const auto n = static_cast<std::size_t>(ipow(3, spec.depth));
  std::size_t cells = 1;
  for (int i = 0; i < spec.dims; ++i) cells *= n;
  const auto block = static_cast<std::size_t>(spec.components * ipow(spec.order + 1, spec.dims));
  std::size_t perCell = block;
  if (spec.layout == StorageLayout::hull) perCell += block;
  if (spec.layout == StorageLayout::threeSweep) {
    perCell += static_cast<std::size_t>(spec.dims + 1) * block * static_cast<std::size_t>(spec.order + 1);
  }
  if (spec.keepRollbackCopy) perCell += block;
  const std::size_t faces = static_cast<std::size_t>(faceCount(spec));
  return sizeof(double) * (cells * perCell + faces * 6 * block);
}

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  validate(spec);
  const std::size_t bytes = estimateGridBytes(spec);
  if (bytes > spec.memoryBudgetBytes) {
    throw ResourceError("grid needs " + std::to_string(bytes) + " bytes, budget is " +
                            std::to_string(spec.memoryBudgetBytes),
                        bytes);
  }
  const int d = spec.dims;
  const int n = ipow(3, spec.depth);
  cellsPerAxis_ = n;
  cellBlock_ = static_cast<std::size_t>(spec.components * ipow(spec.order + 1, d));
  const int cellCount = ipow(n, d);

  cells_.resize(static_cast<std::size_t>(cellCount));
  for (int id = 0; id < cellCount; ++id) {
    Cell& c = cells_[static_cast<std::size_t>(id)];
    int rest = id;
    for (int a = 0; a < d; ++a) {
      c.index[static_cast<std::size_t>(a)] = rest % n;
      rest /= n;
    }
    c.Q.assign(cellBlock_, 0.0);
    if (spec.layout == StorageLayout::hull) c.D.assign(cellBlock_, 0.0);
    if (spec.layout == StorageLayout::threeSweep) c.stp.assign(static_cast<std::size_t>(d + 1) * spaceTimeBlockSize(), 0.0);
    if (spec.keepRollbackCopy) c.previousQ.assign(cellBlock_, 0.0);
  }

  faces_.reserve(static_cast<std::size_t>(faceCount(spec)));
  auto addFace = [&](int axis, int minus, int plus) {
    Face f;
    f.axis = axis;
    f.cells = {minus, plus};
    for (int s = 0; s < 2; ++s) {
      f.hullQ[static_cast<std::size_t>(s)].assign(cellBlock_, 0.0);
      f.hullF[static_cast<std::size_t>(s)].assign(cellBlock_, 0.0);
      f.riemann[static_cast<std::size_t>(s)].assign(cellBlock_, 0.0);
    }
    const int id = static_cast<int>(faces_.size());
    faces_.push_back(std::move(f));
    if (minus >= 0) cells_[static_cast<std::size_t>(minus)].faces[static_cast<std::size_t>(2 * axis + 1)] = id;
    if (plus >= 0) cells_[static_cast<std::size_t>(plus)].faces[static_cast<std::size_t>(2 * axis)] = id;
  };

  for (int axis = 0; axis < d; ++axis) {
    for (int id = 0; id < cellCount; ++id) {
      auto idx = cells_[static_cast<std::size_t>(id)].index;
      const int i = idx[static_cast<std::size_t>(axis)];
      if (spec.boundary == BoundaryKind::outflow && i == 0) addFace(axis, -1, id);
      if (i == n - 1 && spec.boundary == BoundaryKind::outflow) {
        addFace(axis, id, -1);
      } else {
        idx[static_cast<std::size_t>(axis)] = (i + 1) % n;
        addFace(axis, id, cellId(idx));
      }
    }
  }

  const std::size_t fc = faces_.size();
  claims_ = std::make_unique<std::atomic<std::uint64_t>[]>(fc);
  riemannStep_ = std::make_unique<std::atomic<long>[]>(fc);
  riemannSweep_ = std::make_unique<std::atomic<std::uint64_t>[]>(fc);
  for (std::size_t i = 0; i < fc; ++i) {
    claims_[i].store(0);
    riemannStep_[i].store(-1);
    riemannSweep_[i].store(0);
  }
}

int Grid::cellId(const std::array<int, 3>& index) const {
  int id = 0;
  for (int a = dims() - 1; a >= 0; --a) id = id * cellsPerAxis_ + index[static_cast<std::size_t>(a)];
  return id;
}

int Grid::neighbour(int c, int slot) const {
  const Face& f = face(cell(c).faces[static_cast<std::size_t>(slot)]);
  return f.cells[static_cast<std::size_t>(slot % 2 == 1 ? 1 : 0)];
}

int Grid::sideOf(int c, int faceId) const { return face(faceId).cells[0] == c ? 0 : 1; }

int Grid::interiorFaceCount() const {
  int count = 0;
  for (const Face& f : faces_) count += f.isBoundary() ? 0 : 1;
  return count;
}

int Grid::boundaryFaceCount() const { return static_cast<int>(faces_.size()) - interiorFaceCount(); }

std::size_t Grid::persistentDoubles() const {
  std::size_t total = 0;
  for (const Cell& c : cells_) total += c.Q.size() + c.D.size() + c.previousQ.size() + c.stp.size();
  for (const Face& f : faces_) {
    for (int s = 0; s < 2; ++s) {
      const auto k = static_cast<std::size_t>(s);
      total += f.hullQ[k].size() + f.hullF[k].size() + f.riemann[k].size();
    }
  }
  return total;
}

void Grid::beginSweep() {
  if (sweepActive_) throw UsageError("beginSweep: a sweep is already active");
  ++sweepId_;
  sweepActive_ = true;
}

void Grid::endSweep() {
  if (!sweepActive_) throw UsageError("endSweep: no active sweep");
  sweepActive_ = false;
}

bool Grid::claimFirstTouch(int faceId) {
  if (!sweepActive_) throw UsageError("claimFirstTouch called outside of a sweep");
  auto& slot = claims_[static_cast<std::size_t>(faceId)];
  std::uint64_t seen = slot.load(std::memory_order_acquire);
  if (seen == sweepId_) return false;
  return slot.compare_exchange_strong(seen, sweepId_, std::memory_order_acq_rel);
}

double Grid::position(int c, int axis, double xi) const {
  return (cell(c).index[static_cast<std::size_t>(axis)] + xi) * meshWidth();
}

std::unique_ptr<Grid> buildGrid(const GridSpec& spec) { return std::make_unique<Grid>(spec); }

namespace {

void peanoRecurse(int dims, int level, std::array<int, 3> origin, int scale, std::array<bool, 3> flip,
                  std::vector<std::array<int, 3>>& out) {
  if (level == 0) {
    out.push_back(origin);
    return;
  }
  const int children = ipow(3, dims);
  const int sub = scale / 3;
  for (int c = 0; c < children; ++c) {
    // Boustrophedon digits: axis a reverses when the higher-axis counter is odd.
    std::array<int, 3> digit{0, 0, 0};
    int rest = c;
    for (int a = 0; a < dims; ++a) {
      digit[static_cast<std::size_t>(a)] = rest % 3;
      rest /= 3;
    }
    for (int a = 0; a < dims; ++a) {
      int higher = 0;
      for (int b = a + 1; b < dims; ++b) higher += digit[static_cast<std::size_t>(b)];
      if (higher % 2 == 1) digit[static_cast<std::size_t>(a)] = 2 - digit[static_cast<std::size_t>(a)];
    }
    std::array<int, 3> childOrigin = origin;
    std::array<bool, 3> childFlip = flip;
    for (int a = 0; a < dims; ++a) {
      const auto k = static_cast<std::size_t>(a);
      const int pos = flip[k] ? 2 - digit[k] : digit[k];
      childOrigin[k] += pos * sub;
      int others = 0;
      for (int b = 0; b < dims; ++b) {
        if (b != a) others += digit[static_cast<std::size_t>(b)];
      }
      childFlip[k] = flip[k] != (others % 2 == 1);
    }
    peanoRecurse(dims, level - 1, childOrigin, sub, childFlip, out);
  }
}

}  // namespace

std::vector<std::array<int, 3>> peanoCurve(int dims, int depth) {
  std::vector<std::array<int, 3>> out;
  out.reserve(static_cast<std::size_t>(ipow(3, dims * depth)));
  peanoRecurse(dims, depth, {0, 0, 0}, ipow(3, depth), {false, false, false}, out);
  return out;
}

std::vector<int> traversalOrder(const Grid& grid, TraversalKind kind) {
  std::vector<int> order(grid.cells().size());
  if (kind == TraversalKind::lexicographic) {
    std::iota(order.begin(), order.end(), 0);
    return order;
  }
  const auto curve = peanoCurve(grid.dims(), grid.spec().depth);
  for (std::size_t i = 0; i < curve.size(); ++i) order[i] = grid.cellId(curve[i]);
  return order;
}

}  // namespace cadg
