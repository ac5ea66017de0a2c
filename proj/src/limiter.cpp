#include "cadg/limiter.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cadg/errors.hpp"

namespace cadg {

namespace {

/// Applies a rows x cols matrix along every axis of a tensor with `cols` entries per axis.
std::vector<double> applyAllAxes(const std::vector<double>& matrix, int rows, int cols, int dims, int m,
                                 std::span<const double> in) {
  std::vector<double> cur(in.begin(), in.end());
  std::array<int, 3> ext{1, 1, 1};
  for (int a = 0; a < dims; ++a) ext[static_cast<std::size_t>(a)] = cols;
  for (int a = 0; a < dims; ++a) {
    std::array<int, 3> outExt = ext;
    outExt[static_cast<std::size_t>(a)] = rows;
    std::size_t inStride = 1;
    std::size_t outStride = 1;
    for (int b = 0; b < a; ++b) {
      inStride *= static_cast<std::size_t>(ext[static_cast<std::size_t>(b)]);
      outStride *= static_cast<std::size_t>(outExt[static_cast<std::size_t>(b)]);
    }
    std::size_t total = 1;
    for (int b = 0; b < dims; ++b) total *= static_cast<std::size_t>(outExt[static_cast<std::size_t>(b)]);
    std::vector<double> next(total * static_cast<std::size_t>(m), 0.0);
    const auto mm = static_cast<std::size_t>(m);
    for (std::size_t o = 0; o < total; ++o) {
      const std::size_t r = (o / outStride) % static_cast<std::size_t>(rows);
      const std::size_t lowPart = o % outStride;
      const std::size_t high = o / (outStride * static_cast<std::size_t>(rows));
      const std::size_t inBase = lowPart + high * inStride * static_cast<std::size_t>(cols);
      for (int j = 0; j < cols; ++j) {
        const double c = matrix[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)];
        const double* src = cur.data() + (inBase + static_cast<std::size_t>(j) * inStride) * mm;
        for (std::size_t v = 0; v < mm; ++v) next[o * mm + v] += c * src[v];
      }
    }
    cur.swap(next);
    ext = outExt;
  }
  return cur;
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

LimiterOps::LimiterOps(const Operators& ops)
    : dims(ops.dims), order(ops.order), n(ops.n), resolution(2 * ops.order + 1), m(ops.m) {
  subcells = ipow(static_cast<std::size_t>(resolution), dims);
  const QuadratureRule rule = gaussLegendre(order);
  const double hs = 1.0 / resolution;
  const auto nn = static_cast<std::size_t>(n);
  const auto rr = static_cast<std::size_t>(resolution);
  projection.assign(rr * nn, 0.0);
  for (std::size_t s = 0; s < rr; ++s) {
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const std::vector<double> phi = ops.basis.evaluate((static_cast<double>(s) + rule.nodes[q]) * hs);
      for (std::size_t j = 0; j < nn; ++j) projection[s * nn + j] += rule.weights[q] * phi[j];
    }
  }
  Eigen::MatrixXd P(resolution, n);
  for (int s = 0; s < resolution; ++s) {
    for (int j = 0; j < n; ++j) P(s, j) = projection[static_cast<std::size_t>(s) * nn + static_cast<std::size_t>(j)];
  }
  const Eigen::MatrixXd R = (P.transpose() * P).ldlt().solve(P.transpose());
  reconstruction.resize(nn * rr);
  for (int j = 0; j < n; ++j) {
    for (int s = 0; s < resolution; ++s) {
      reconstruction[static_cast<std::size_t>(j) * rr + static_cast<std::size_t>(s)] = R(j, s);
    }
  }
  nodeSubcell.resize(nn);
  for (std::size_t j = 0; j < nn; ++j) {
    nodeSubcell[j] = std::min(resolution - 1, static_cast<int>(ops.basis.nodes[j] * resolution));
  }
}

FVPatch projectToPatch(const LimiterOps& lops, std::span<const double> Q) {
  FVPatch patch;
  patch.dims = lops.dims;
  patch.resolution = lops.resolution;
  patch.components = lops.m;
  patch.states = applyAllAxes(lops.projection, lops.resolution, lops.n, lops.dims, lops.m, Q);
  return patch;
}

std::vector<double> reconstruct(const LimiterOps& lops, const FVPatch& patch) {
  if (patch.resolution != lops.resolution) throw UsageError("reconstruct: patch resolution mismatch");
  return applyAllAxes(lops.reconstruction, lops.n, lops.resolution, lops.dims, lops.m, patch.states);
}

Bounds::Bounds(int components)
    : lo(static_cast<std::size_t>(components), std::numeric_limits<double>::infinity()),
      hi(static_cast<std::size_t>(components), -std::numeric_limits<double>::infinity()) {}

void Bounds::include(std::span<const double> states) {
  const std::size_t m = lo.size();
  for (std::size_t k = 0; k + m <= states.size(); k += m) {
    for (std::size_t v = 0; v < m; ++v) {
      lo[v] = std::min(lo[v], states[k + v]);
      hi[v] = std::max(hi[v], states[k + v]);
    }
  }
}

void Bounds::include(const Bounds& other) {
  for (std::size_t v = 0; v < lo.size(); ++v) {
    lo[v] = std::min(lo[v], other.lo[v]);
    hi[v] = std::max(hi[v], other.hi[v]);
  }
}

Bounds patchBounds(const FVPatch& patch) {
  Bounds b(patch.components);
  b.include(patch.states);
  return b;
}

double dmpTolerance(double lo, double hi) { return 1e-3 + 1e-2 * (hi - lo); }

bool detectTroubled(const LimiterOps& lops, const PdeSystem& pde, std::span<const double> Q, const Bounds* bounds) {
  const auto m = static_cast<std::size_t>(lops.m);
  for (std::size_t k = 0; k < Q.size(); k += m) {
    if (!pde.isAdmissible(Q.subspan(k, m))) return true;
  }
  const FVPatch patch = projectToPatch(lops, Q);
  for (std::size_t s = 0; s < patch.subcells(); ++s) {
    if (!pde.isAdmissible(std::span<const double>(patch.at(s), m))) return true;
  }
  if (bounds == nullptr) return false;
  const Bounds own = patchBounds(patch);
  for (std::size_t v = 0; v < m; ++v) {
    const double delta = dmpTolerance(bounds->lo[v], bounds->hi[v]);
    if (own.lo[v] < bounds->lo[v] - delta || own.hi[v] > bounds->hi[v] + delta) return true;
  }
  return false;
}

std::vector<double> edgeLayer(const FVPatch& patch, int axis, int side) {
  const auto r = static_cast<std::size_t>(patch.resolution);
  const auto m = static_cast<std::size_t>(patch.components);
  const std::size_t stride = ipow(r, axis);
  const std::size_t fixed = side == 0 ? 0 : r - 1;
  std::vector<double> layer;
  layer.reserve(patch.states.size() / r);
  for (std::size_t s = 0; s < patch.subcells(); ++s) {
    if ((s / stride) % r != fixed) continue;
    layer.insert(layer.end(), patch.at(s), patch.at(s) + m);
  }
  return layer;
}

PatchGhosts periodicGhosts(const FVPatch& patch) {
  PatchGhosts g;
  for (int a = 0; a < patch.dims; ++a) {
    g.layers[static_cast<std::size_t>(2 * a)] = edgeLayer(patch, a, 1);
    g.layers[static_cast<std::size_t>(2 * a + 1)] = edgeLayer(patch, a, 0);
  }
  return g;
}

double maxStableFvStep(const PdeSystem& pde, const FVPatch& patch, const PatchGhosts& ghosts, double hSub,
                       double cfl) {
  double lambda = maxSignalSpeedOver(pde, patch.states, patch.dims);
  for (int slot = 0; slot < 2 * patch.dims; ++slot) {
    lambda = std::max(lambda, maxSignalSpeedOver(pde, ghosts.layers[static_cast<std::size_t>(slot)], patch.dims));
  }
  if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
  return cfl * hSub / (patch.dims * lambda);
}

void rusanovFVStep(const PdeSystem& pde, FVPatch& patch, const PatchGhosts& ghosts, double dt, double hSub,
                   double cfl) {
  const double limit = maxStableFvStep(pde, patch, ghosts, hSub, cfl);
  if (dt > limit) {
    throw CflViolation("finite-volume step " + std::to_string(dt) + " exceeds the CFL limit " + std::to_string(limit),
                       limit);
  }
  const int d = patch.dims;
  const auto r = static_cast<std::size_t>(patch.resolution);
  const auto m = static_cast<std::size_t>(patch.components);
  const std::vector<double> old = patch.states;
  const double c = dt / hSub;
  std::vector<double> fl(m), fr(m), flux(m), D(m);

  // Rusanov flux between a left and right state along axis a.
  auto rusanov = [&](const double* ql, const double* qr, int a) {
    const double alpha = std::max(std::max(0.0, pde.maxSignalSpeed(std::span<const double>(ql, m), a)),
                                  pde.maxSignalSpeed(std::span<const double>(qr, m), a));
    pde.flux(std::span<const double>(ql, m), a, fl);
    pde.flux(std::span<const double>(qr, m), a, fr);
    for (std::size_t v = 0; v < m; ++v) flux[v] = 0.5 * (fl[v] + fr[v]) - 0.5 * alpha * (qr[v] - ql[v]);
  };

  for (std::size_t s = 0; s < patch.subcells(); ++s) {
    const double* q = old.data() + s * m;
    std::fill(D.begin(), D.end(), 0.0);
    for (int a = 0; a < d; ++a) {
      const std::size_t stride = ipow(r, a);
      const std::size_t i = (s / stride) % r;
      // Position of this subcell within the ghost layer (tangential axes ascending).
      std::size_t layerIndex = 0;
      std::size_t mult = 1;
      for (int b = 0; b < d; ++b) {
        if (b == a) continue;
        layerIndex += ((s / ipow(r, b)) % r) * mult;
        mult *= r;
      }
      const double* left = i > 0 ? old.data() + (s - stride) * m
                                 : ghosts.layers[static_cast<std::size_t>(2 * a)].data() + layerIndex * m;
      const double* right = i + 1 < r ? old.data() + (s + stride) * m
                                      : ghosts.layers[static_cast<std::size_t>(2 * a + 1)].data() + layerIndex * m;
      rusanov(left, q, a);
      for (std::size_t v = 0; v < m; ++v) D[v] += c * flux[v];
      rusanov(q, right, a);
      for (std::size_t v = 0; v < m; ++v) D[v] -= c * flux[v];
    }
    double* out = patch.at(s);
    for (std::size_t v = 0; v < m; ++v) out[v] += D[v];
  }
}

void patchHull(const Operators& ops, const LimiterOps& lops, const PdeSystem& pde, const FVPatch& patch,
               std::span<const HullTarget> targets) {
  const auto n = static_cast<std::size_t>(ops.n);
  const auto m = static_cast<std::size_t>(ops.m);
  const auto r = static_cast<std::size_t>(lops.resolution);
  const std::size_t Nf = ops.faceNodes;
  std::vector<double> f(m);
  for (int a = 0; a < ops.dims; ++a) {
    for (int side = 0; side < 2; ++side) {
      const HullTarget& tgt = targets[static_cast<std::size_t>(2 * a + side)];
      const double sign = side == 0 ? -1.0 : 1.0;
      for (std::size_t fs = 0; fs < Nf; ++fs) {
        // Subcell: boundary layer along a, containing subcell along tangential axes.
        const std::size_t node = ops.faceBase[static_cast<std::size_t>(a)][fs];
        std::size_t sub = 0;
        for (int b = 0; b < ops.dims; ++b) {
          const std::size_t ib = (node / ops.stride[static_cast<std::size_t>(b)]) % n;
          const std::size_t sb = b == a ? (side == 0 ? 0 : r - 1) : static_cast<std::size_t>(lops.nodeSubcell[ib]);
          sub += sb * ipow(r, b);
        }
        const double* state = patch.at(sub);
        pde.flux(std::span<const double>(state, m), a, f);
        for (std::size_t t = 0; t < n; ++t) {
          double* oq = tgt.q.data() + (t * Nf + fs) * m;
          double* of = tgt.f.data() + (t * Nf + fs) * m;
          for (std::size_t v = 0; v < m; ++v) {
            oq[v] = state[v];
            of[v] = sign * f[v];
          }
        }
      }
    }
  }
}

}  // namespace cadg
