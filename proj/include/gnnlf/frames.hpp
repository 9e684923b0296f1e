#pragma once
// Per-atom equivariant frames and the scalar projections derived from them.
//
// A frame for atom i is an F x 3 matrix: F learned direction vectors built by
// cutoff-weighted message passing over neighbor unit vectors.  Every model
// quantity consumed downstream is a projection of geometry onto frames (or of
// frames onto frames), which keeps the network exactly invariant while the
// frames themselves stay exactly equivariant.
//
// On a tape, a frame set is stored as three (N,F) tensors, one per Cartesian
// component, so all frame arithmetic stays inside rank-2 tensor ops.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "tensor.hpp"

namespace gnnlf {

namespace detail {
// Test seam: lets the suite inject a sign slip into the center-frame
// projection to confirm which checks are sensitive to it.
inline double d1_projection_sign = 1.0;
}  // namespace detail

struct FrameSet {
  Var x, y, z;  // each (N,F): Cartesian component c of every frame row

  int64_t natoms() const { return x.rows(); }
  int64_t nvec() const { return x.cols(); }
};

// ---------------------------------------------------------------------------
// Frame generation: Ê_i = Σ_{j in N(i)} w_ij (f_ij ⊙ s_j) ∘ û_ij
// node_scalars: (N,F), edge_filters: (E,F); weight (E,1) and unit (E,3) come
// from edge_geometry so frames stay differentiable w.r.t. coordinates.
// ---------------------------------------------------------------------------
inline FrameSet generate_frames(Tape& t, const NeighborGraph& g, Var node_scalars,
                                Var edge_filters, Var edge_weight, Var edge_unit) {
  const int64_t N = g.natoms, E = g.nedges(), F = node_scalars.cols();
  if (node_scalars.rows() != N) throw std::invalid_argument("node scalars must be (N,F)");
  if (edge_filters.rows() != E || edge_filters.cols() != F)
    throw std::invalid_argument("edge filters must be (E,F)");
  Var msg = edge_weight * (edge_filters * t.gather_rows(node_scalars, g.dst));  // (E,F)
  FrameSet fs;
  Var* comp[3] = {&fs.x, &fs.y, &fs.z};
  for (int64_t c = 0; c < 3; ++c) {
    Var uc = t.slice_cols(edge_unit, c, c + 1);  // (E,1)
    *comp[c] = t.segment_sum(msg * uc, g.src, N);
  }
  return fs;
}

// Replaces each atom's frame by the sum over all atoms (shared global frame).
inline FrameSet global_frame(Tape& t, const FrameSet& fs) {
  const int64_t N = fs.natoms(), F = fs.nvec();
  return {t.broadcast_to(sum_rows(fs.x), N, F), t.broadcast_to(sum_rows(fs.y), N, F),
          t.broadcast_to(sum_rows(fs.z), N, F)};
}

// ---------------------------------------------------------------------------
// Projections, each (E,F).
//   d1: edge direction onto the center frame Ê_i
//   d2: edge direction onto the neighbor frame Ê_j
//   d3: ⟨Ê_j W1, Ê_i W2⟩ row-wise — frame-on-frame transport
// ---------------------------------------------------------------------------
inline Var project_d1(Tape& t, const NeighborGraph& g, const FrameSet& fs, Var edge_unit) {
  const Var* comp[3] = {&fs.x, &fs.y, &fs.z};
  Var acc;
  for (int64_t c = 0; c < 3; ++c) {
    Var uc = t.slice_cols(edge_unit, c, c + 1);
    Var term = t.gather_rows(*comp[c], g.src) * uc;
    acc = c == 0 ? term : acc + term;
  }
  return acc * detail::d1_projection_sign;
}

inline Var project_d2(Tape& t, const NeighborGraph& g, const FrameSet& fs, Var edge_unit) {
  const Var* comp[3] = {&fs.x, &fs.y, &fs.z};
  Var acc;
  for (int64_t c = 0; c < 3; ++c) {
    Var uc = t.slice_cols(edge_unit, c, c + 1);
    Var term = t.gather_rows(*comp[c], g.dst) * uc;
    acc = c == 0 ? term : acc + term;
  }
  return acc;
}

inline Var project_d3(Tape& t, const NeighborGraph& g, const FrameSet& fs, Var W1, Var W2) {
  const Var* comp[3] = {&fs.x, &fs.y, &fs.z};
  Var acc;
  for (int64_t c = 0; c < 3; ++c) {
    Var neighbor = t.gather_rows(t.matmul(*comp[c], W1), g.dst);
    Var center = t.gather_rows(t.matmul(*comp[c], W2), g.src);
    Var term = neighbor * center;
    acc = c == 0 ? term : acc + term;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Numeric conveniences for diagnostics: frames as plain (F,3) tensors.
// ---------------------------------------------------------------------------

// Extract per-atom frame matrices from an already-built frame set.
inline std::vector<Tensor> frame_tensors(const FrameSet& fs) {
  const int64_t N = fs.x.rows(), F = fs.x.cols();
  const auto vx = fs.x.values(), vy = fs.y.values(), vz = fs.z.values();
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(N));
  for (int64_t i = 0; i < N; ++i) {
    Tensor fr(F, 3);
    for (int64_t k = 0; k < F; ++k) {
      fr.at(k, 0) = vx[static_cast<size_t>(i * F + k)];
      fr.at(k, 1) = vy[static_cast<size_t>(i * F + k)];
      fr.at(k, 2) = vz[static_cast<size_t>(i * F + k)];
    }
    out.push_back(std::move(fr));
  }
  return out;
}

inline std::vector<Tensor> frames_numeric(const NeighborGraph& g, const Tensor& node_scalars,
                                          const Tensor& edge_filters) {
  Tape t;
  Var w = t.constant(Tensor(g.nedges(), 1, g.weight));
  Var u = t.constant(Tensor(g.nedges(), 3, g.unit));
  FrameSet fs = generate_frames(t, g, t.constant(node_scalars), t.constant(edge_filters), w, u);
  const int64_t F = node_scalars.cols;
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(g.natoms));
  for (int64_t i = 0; i < g.natoms; ++i) {
    Tensor fr(F, 3);
    for (int64_t k = 0; k < F; ++k) {
      fr.at(k, 0) = fs.x.values()[static_cast<size_t>(i * F + k)];
      fr.at(k, 1) = fs.y.values()[static_cast<size_t>(i * F + k)];
      fr.at(k, 2) = fs.z.values()[static_cast<size_t>(i * F + k)];
    }
    out.push_back(std::move(fr));
  }
  return out;
}

// Singular values of an (F,3) frame, descending, via Jacobi iteration on the
// 3x3 Gram matrix.
inline std::array<double, 3> frame_singular_values(const Tensor& frame) {
  if (frame.cols != 3) throw std::invalid_argument("frame must be (F,3)");
  double G[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (int64_t r = 0; r < frame.rows; ++r)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) G[a][b] += frame.at(r, a) * frame.at(r, b);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) off += G[p][q] * G[p][q];
    if (off < 1e-60) break;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (G[p][q] == 0.0) continue;
        const double theta = 0.5 * std::atan2(2.0 * G[p][q], G[q][q] - G[p][p]);
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < 3; ++k) {
          const double gkp = G[k][p], gkq = G[k][q];
          G[k][p] = c * gkp - s * gkq;
          G[k][q] = s * gkp + c * gkq;
        }
        for (int k = 0; k < 3; ++k) {
          const double gpk = G[p][k], gqk = G[q][k];
          G[p][k] = c * gpk - s * gqk;
          G[q][k] = s * gpk + c * gqk;
        }
      }
  }
  std::array<double, 3> ev = {G[0][0], G[1][1], G[2][2]};
  std::sort(ev.begin(), ev.end(), std::greater<double>());
  for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
  return ev;
}

// Numerical rank: number of singular values above tol * largest; rank 0 when
// the frame vanishes outright.
inline int frame_rank(const Tensor& frame, double tol = 1e-7) {
  const auto sv = frame_singular_values(frame);
  if (sv[0] < 1e-12) return 0;
  int rank = 0;
  for (double s : sv)
    if (s > tol * sv[0]) ++rank;
  return rank;
}

// Project points onto an invertible 3x3 frame and map them back; a full-rank
// frame must reproduce the input exactly (up to roundoff).
inline Tensor project_and_invert(const Tensor& points, const Tensor& frame) {
  if (frame.rows != 3 || frame.cols != 3) throw std::invalid_argument("frame must be 3x3");
  if (points.cols != 3) throw std::invalid_argument("points must be (M,3)");
  if (frame_rank(frame, 1e-9) < 3) throw std::invalid_argument("singular frame");

  // projections p = x frameᵀ, reconstruction x = p (frame⁻¹)ᵀ
  const auto& f = frame.data;
  const double det = f[0] * (f[4] * f[8] - f[5] * f[7]) - f[1] * (f[3] * f[8] - f[5] * f[6]) +
                     f[2] * (f[3] * f[7] - f[4] * f[6]);
  if (det == 0.0) throw std::invalid_argument("singular frame");
  const double inv[9] = {
      (f[4] * f[8] - f[5] * f[7]) / det, (f[2] * f[7] - f[1] * f[8]) / det,
      (f[1] * f[5] - f[2] * f[4]) / det, (f[5] * f[6] - f[3] * f[8]) / det,
      (f[0] * f[8] - f[2] * f[6]) / det, (f[2] * f[3] - f[0] * f[5]) / det,
      (f[3] * f[7] - f[4] * f[6]) / det, (f[1] * f[6] - f[0] * f[7]) / det,
      (f[0] * f[4] - f[1] * f[3]) / det};

  Tensor proj(points.rows, 3);
  for (int64_t i = 0; i < points.rows; ++i)
    for (int64_t a = 0; a < 3; ++a)
      for (int64_t b = 0; b < 3; ++b) proj.at(i, a) += points.at(i, b) * frame.at(a, b);
  Tensor back(points.rows, 3);
  for (int64_t i = 0; i < points.rows; ++i)
    for (int64_t a = 0; a < 3; ++a)
      for (int64_t b = 0; b < 3; ++b)
        back.at(i, a) += proj.at(i, b) * inv[static_cast<size_t>(a * 3 + b)];
  return back;
}

// ---------------------------------------------------------------------------
// Order-dependent fallback frame: greedy orthonormalization of directions to
// the other atoms, scanned in input order; rows beyond the spanned dimension
// stay zero.  First row is the unit direction to the first other atom.
// ---------------------------------------------------------------------------
inline Tensor node_identity_frame(const MoleculeConf& conf, int64_t i) {
  const int64_t n = conf.natoms();
  if (i < 0 || i >= n) throw std::invalid_argument("atom index out of range");
  Tensor frame(3, 3);
  int rank = 0;
  for (int64_t j = 0; j < n && rank < 3; ++j) {
    if (j == i) continue;
    double v[3];
    double norm2 = 0.0;
    for (int64_t a = 0; a < 3; ++a) {
      v[a] = conf.coord(j, a) - conf.coord(i, a);
      norm2 += v[a] * v[a];
    }
    const double scale = std::sqrt(norm2);
    for (int r = 0; r < rank; ++r) {
      double d = 0.0;
      for (int64_t a = 0; a < 3; ++a) d += v[a] * frame.at(r, a);
      for (int64_t a = 0; a < 3; ++a) v[a] -= d * frame.at(r, a);
    }
    double res = 0.0;
    for (int64_t a = 0; a < 3; ++a) res += v[a] * v[a];
    res = std::sqrt(res);
    if (res <= 1e-10 * scale) continue;
    for (int64_t a = 0; a < 3; ++a) frame.at(rank, a) = v[a] / res;
    ++rank;
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Reference relational pooling: average an order-sensitive evaluation over
// every atom ordering.  Atoms are first sorted canonically (species, then
// coordinates) so the enumeration — and therefore the floating-point result —
// is bitwise identical for any permutation of the input.
// ---------------------------------------------------------------------------
inline double relational_pool_reference(const MoleculeConf& conf,
                                        const std::function<double(const MoleculeConf&)>& fn) {
  const int64_t n = conf.natoms();
  if (n > 6)
    throw std::invalid_argument("relational pooling enumerates N! orderings; refusing N > 6");
  conf.validate();

  std::vector<int64_t> canon(static_cast<size_t>(n));
  for (int64_t k = 0; k < n; ++k) canon[static_cast<size_t>(k)] = k;
  std::sort(canon.begin(), canon.end(), [&](int64_t a, int64_t b) {
    if (conf.z[static_cast<size_t>(a)] != conf.z[static_cast<size_t>(b)])
      return conf.z[static_cast<size_t>(a)] < conf.z[static_cast<size_t>(b)];
    for (int64_t c = 0; c < 3; ++c)
      if (conf.coord(a, c) != conf.coord(b, c)) return conf.coord(a, c) < conf.coord(b, c);
    return false;  // coincident atoms are excluded by validate()
  });

  std::vector<int64_t> perm(static_cast<size_t>(n));
  for (int64_t k = 0; k < n; ++k) perm[static_cast<size_t>(k)] = k;
  double sum = 0.0;
  int64_t count = 0;
  do {
    MoleculeConf ordered;
    ordered.z.reserve(static_cast<size_t>(n));
    ordered.coords.reserve(static_cast<size_t>(n * 3));
    for (int64_t k = 0; k < n; ++k) {
      const int64_t src = canon[static_cast<size_t>(perm[static_cast<size_t>(k)])];
      ordered.z.push_back(conf.z[static_cast<size_t>(src)]);
      for (int64_t a = 0; a < 3; ++a) ordered.coords.push_back(conf.coord(src, a));
    }
    sum += fn(ordered);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / static_cast<double>(count);
}

}  // namespace gnnlf
