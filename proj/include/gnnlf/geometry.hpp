#pragma once
// Molecular conformations, element data, the smooth cutoff envelope, radial
// basis features and O(N^2) neighbor-graph construction.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace gnnlf {

// ---------------------------------------------------------------------------
// Element data (Z = 1..54).
// ---------------------------------------------------------------------------
namespace detail {
struct ElementRow {
  const char* symbol;
  double mass;
};
inline constexpr ElementRow kElements[] = {
    {"H", 1.008},       {"He", 4.002602},  {"Li", 6.94},      {"Be", 9.0121831},
    {"B", 10.81},       {"C", 12.011},     {"N", 14.007},     {"O", 15.999},
    {"F", 18.998403},   {"Ne", 20.1797},   {"Na", 22.989769}, {"Mg", 24.305},
    {"Al", 26.981539},  {"Si", 28.085},    {"P", 30.973762},  {"S", 32.06},
    {"Cl", 35.45},      {"Ar", 39.948},    {"K", 39.0983},    {"Ca", 40.078},
    {"Sc", 44.955908},  {"Ti", 47.867},    {"V", 50.9415},    {"Cr", 51.9961},
    {"Mn", 54.938044},  {"Fe", 55.845},    {"Co", 58.933194}, {"Ni", 58.6934},
    {"Cu", 63.546},     {"Zn", 65.38},     {"Ga", 69.723},    {"Ge", 72.63},
    {"As", 74.921595},  {"Se", 78.971},    {"Br", 79.904},    {"Kr", 83.798},
    {"Rb", 85.4678},    {"Sr", 87.62},     {"Y", 88.90584},   {"Zr", 91.224},
    {"Nb", 92.90637},   {"Mo", 95.95},     {"Tc", 98.0},      {"Ru", 101.07},
    {"Rh", 102.9055},   {"Pd", 106.42},    {"Ag", 107.8682},  {"Cd", 112.414},
    {"In", 114.818},    {"Sn", 118.71},    {"Sb", 121.76},    {"Te", 127.6},
    {"I", 126.90447},   {"Xe", 131.293},
};
inline constexpr int64_t kMaxZ = static_cast<int64_t>(sizeof(kElements) / sizeof(kElements[0]));
}  // namespace detail

inline int64_t atomic_number(const std::string& symbol) {
  for (int64_t z = 1; z <= detail::kMaxZ; ++z)
    if (symbol == detail::kElements[z - 1].symbol) return z;
  throw std::invalid_argument("unknown element symbol '" + symbol + "'");
}

inline const char* element_symbol(int64_t z) {
  if (z < 1 || z > detail::kMaxZ)
    throw std::invalid_argument("atomic number " + std::to_string(z) + " out of supported range");
  return detail::kElements[z - 1].symbol;
}

inline double atomic_mass(int64_t z) {
  if (z < 1 || z > detail::kMaxZ)
    throw std::invalid_argument("atomic number " + std::to_string(z) + " out of supported range");
  return detail::kElements[z - 1].mass;
}

// ---------------------------------------------------------------------------
// Conformation.
// ---------------------------------------------------------------------------
inline constexpr double kMinAtomSeparation = 1e-6;  // Angstrom

struct MoleculeConf {
  std::vector<int64_t> z;       // atomic numbers, length N
  std::vector<double> coords;   // N x 3 row-major, Angstrom
  std::optional<double> energy; // reference energy
  std::vector<double> forces;   // empty, or N x 3 reference forces

  int64_t natoms() const { return static_cast<int64_t>(z.size()); }

  double coord(int64_t atom, int64_t axis) const {
    return coords[static_cast<size_t>(atom * 3 + axis)];
  }

  void validate() const {
    const int64_t n = natoms();
    if (n == 0) throw std::invalid_argument("conformation has no atoms");
    if (static_cast<int64_t>(coords.size()) != n * 3)
      throw std::invalid_argument("coordinate array has wrong length for " + std::to_string(n) +
                                  " atoms");
    if (!forces.empty() && static_cast<int64_t>(forces.size()) != n * 3)
      throw std::invalid_argument("force array has wrong length for " + std::to_string(n) + " atoms");
    for (int64_t zi : z)
      if (zi < 1 || zi > detail::kMaxZ)
        throw std::invalid_argument("atomic number " + std::to_string(zi) + " out of supported range");
    for (double v : coords)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite coordinate");
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (int64_t a = 0; a < 3; ++a) {
          const double d = coord(i, a) - coord(j, a);
          d2 += d * d;
        }
        if (d2 < kMinAtomSeparation * kMinAtomSeparation)
          throw std::invalid_argument("atoms " + std::to_string(i) + " and " + std::to_string(j) +
                                      " are closer than the minimum separation");
      }
  }
};

// ---------------------------------------------------------------------------
// Cutoff envelope and radial basis.
// ---------------------------------------------------------------------------
// Smooth cosine envelope: 1 at r=0, 0 at r>=r_cut, zero slope at the boundary.
inline double cutoff_weight(double r, double r_cut) {
  if (r_cut <= 0.0) throw std::invalid_argument("cutoff radius must be positive");
  if (r >= r_cut) return 0.0;
  return 0.5 * (1.0 + std::cos(M_PI * r / r_cut));
}

inline double rbf_value(double r, double beta, double mu) {
  const double d = std::exp(-r) - mu;
  return std::exp(-beta * d * d);
}

// Initial basis parameters: centers equally spaced on [exp(-r_cut), 1] in the
// exp(-r) coordinate, shared width from the center spacing.
struct RbfInit {
  Tensor mu;    // (1,K)
  Tensor beta;  // (1,K)
};

inline RbfInit rbf_init(int64_t K, double r_cut) {
  if (K < 1) throw std::invalid_argument("radial basis size must be >= 1");
  if (r_cut <= 0.0) throw std::invalid_argument("cutoff radius must be positive");
  const double lo = std::exp(-r_cut);
  RbfInit init{Tensor(1, K), Tensor(1, K)};
  const double width = 2.0 * (1.0 - lo) / static_cast<double>(K);
  const double beta = 1.0 / (width * width);
  for (int64_t k = 0; k < K; ++k) {
    init.mu.data[static_cast<size_t>(k)] =
        K == 1 ? 0.5 * (lo + 1.0)
               : lo + (1.0 - lo) * static_cast<double>(k) / static_cast<double>(K - 1);
    init.beta.data[static_cast<size_t>(k)] = beta;
  }
  return init;
}

// ---------------------------------------------------------------------------
// Neighbor graph: directed edges (i, j), i != j, |r_i - r_j| < r_cut, in
// lexicographic (i, j) order.  unit rows hold (r_i - r_j)/d, i.e. they point
// from the neighbor j toward the center i.
// ---------------------------------------------------------------------------
struct NeighborGraph {
  int64_t natoms = 0;
  double r_cut = 0.0;
  std::shared_ptr<const std::vector<int64_t>> src;  // center index i, length E
  std::shared_ptr<const std::vector<int64_t>> dst;  // neighbor index j, length E
  std::vector<double> dist;    // E
  std::vector<double> unit;    // E x 3
  std::vector<double> weight;  // E, cutoff envelope at dist

  int64_t nedges() const { return static_cast<int64_t>(dist.size()); }
};

inline NeighborGraph build_neighbor_graph(const MoleculeConf& conf, double r_cut) {
  conf.validate();
  if (r_cut <= 0.0) throw std::invalid_argument("cutoff radius must be positive");
  const int64_t n = conf.natoms();
  auto src = std::make_shared<std::vector<int64_t>>();
  auto dst = std::make_shared<std::vector<int64_t>>();
  NeighborGraph g;
  g.natoms = n;
  g.r_cut = r_cut;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (int64_t a = 0; a < 3; ++a) {
        const double d = conf.coord(i, a) - conf.coord(j, a);
        d2 += d * d;
      }
      const double d = std::sqrt(d2);
      if (d >= r_cut) continue;
      src->push_back(i);
      dst->push_back(j);
      g.dist.push_back(d);
      for (int64_t a = 0; a < 3; ++a) g.unit.push_back((conf.coord(i, a) - conf.coord(j, a)) / d);
      g.weight.push_back(cutoff_weight(d, r_cut));
    }
  g.src = std::move(src);
  g.dst = std::move(dst);
  return g;
}

// Numeric radial features, (E, K).
inline Tensor rbf_features(const NeighborGraph& g, const Tensor& beta, const Tensor& mu) {
  if (beta.rows != 1 || mu.rows != 1 || beta.cols != mu.cols)
    throw std::invalid_argument("radial basis parameters must be (1,K) each");
  const int64_t E = g.nedges(), K = beta.cols;
  Tensor out(E, K);
  for (int64_t e = 0; e < E; ++e)
    for (int64_t k = 0; k < K; ++k)
      out.at(e, k) = rbf_value(g.dist[static_cast<size_t>(e)], beta.data[static_cast<size_t>(k)],
                               mu.data[static_cast<size_t>(k)]);
  return out;
}

// ---------------------------------------------------------------------------
// Differentiable edge featurization on a tape.  The edge set is fixed by the
// graph; distances, directions and envelopes are recomputed from the
// coordinate variable so they carry gradients.
// ---------------------------------------------------------------------------
struct EdgeGeometry {
  Var disp;    // (E,3) r_i - r_j
  Var dist;    // (E,1)
  Var unit;    // (E,3)
  Var weight;  // (E,1) cutoff envelope
};

inline EdgeGeometry edge_geometry(Tape& t, Var coords, const NeighborGraph& g) {
  if (coords.rows() != g.natoms || coords.cols() != 3)
    throw std::invalid_argument("coordinate variable must be (N,3) matching the graph");
  EdgeGeometry eg;
  eg.disp = t.gather_rows(coords, g.src) - t.gather_rows(coords, g.dst);
  eg.dist = sqrt(sum_cols(eg.disp * eg.disp));
  eg.unit = eg.disp / eg.dist;
  // 0.5 (1 + cos(pi r / r_cut)); non-negative on both sides of r_cut, flat at it.
  eg.weight = 0.5 * (1.0 + cos(eg.dist * (M_PI / g.r_cut)));
  return eg;
}

// Differentiable radial features: exp(-beta (exp(-r) - mu)^2), (E,K).
inline Var rbf_expand(Tape& t, Var dist, Var beta, Var mu) {
  const int64_t E = dist.rows(), K = beta.cols();
  Var x = t.broadcast_to(exp(-dist), E, K);
  Var m = t.broadcast_to(mu, E, K);
  Var b = t.broadcast_to(beta, E, K);
  Var d = x - m;
  return exp(-(b * d * d));
}

}  // namespace gnnlf
