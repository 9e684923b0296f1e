#pragma once
// Self-contained verification suites over the whole pipeline: symmetry
// properties, gradient correctness, degeneracy diagnostics, expressivity
// separation, the permutation-pooling oracle, and cutoff smoothness.
//
// Each suite builds its own fixtures (random models and conformations from a
// caller-supplied seed) and returns a pass flag plus named metrics, so the
// same code backs both the command-line `verify` subcommand and the
// acceptance harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace gnnlf {

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> metrics;

  double metric(const std::string& key) const {
    for (const auto& [k, v] : metrics)
      if (k == key) return v;
    throw std::out_of_range("no metric named '" + key + "'");
  }
};

namespace verify_detail {

// ---- small self-contained random-geometry helpers ----

inline std::vector<double> random_orthogonal(std::mt19937_64& rng, bool reflect) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  double q[3][3];
  for (int c = 0; c < 3; ++c) {
    double v[3] = {gauss(rng), gauss(rng), gauss(rng)};
    for (int p = 0; p < c; ++p) {
      const double d = v[0] * q[p][0] + v[1] * q[p][1] + v[2] * q[p][2];
      for (int k = 0; k < 3; ++k) v[k] -= d * q[p][k];
    }
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (int k = 0; k < 3; ++k) q[c][k] = v[k] / n;
  }
  std::vector<double> out(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<size_t>(r * 3 + c)] = q[r][c];
  if (reflect)
    for (int c = 0; c < 3; ++c) out[static_cast<size_t>(c)] = -out[static_cast<size_t>(c)];
  return out;
}

inline MoleculeConf random_conf(int64_t n, std::mt19937_64& rng, double box = 6.0,
                                double min_sep = 1.2) {
  static const std::vector<int64_t> pool = {1, 6, 7, 8, 9};
  std::uniform_real_distribution<double> u(0.0, box);
  std::uniform_int_distribution<size_t> zs(0, pool.size() - 1);
  MoleculeConf c;
  for (int64_t i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 4000) throw std::runtime_error("random conformation rejection stalled");
      const double x = u(rng), y = u(rng), z = u(rng);
      bool ok = true;
      for (int64_t j = 0; j < i && ok; ++j) {
        const double dx = x - c.coords[static_cast<size_t>(3 * j)];
        const double dy = y - c.coords[static_cast<size_t>(3 * j + 1)];
        const double dz = z - c.coords[static_cast<size_t>(3 * j + 2)];
        ok = dx * dx + dy * dy + dz * dz >= min_sep * min_sep;
      }
      if (ok) {
        c.coords.insert(c.coords.end(), {x, y, z});
        break;
      }
    }
    c.z.push_back(pool[zs(rng)]);
  }
  return c;
}

inline MoleculeConf transform_conf(const MoleculeConf& c, const std::vector<double>& q,
                                   const double shift[3]) {
  MoleculeConf out = c;
  for (int64_t i = 0; i < c.natoms(); ++i)
    for (int a = 0; a < 3; ++a) {
      double v = shift[a];
      for (int b = 0; b < 3; ++b) v += q[static_cast<size_t>(a * 3 + b)] * c.coord(i, b);
      out.coords[static_cast<size_t>(i * 3 + a)] = v;
    }
  return out;
}

inline MoleculeConf permute_conf(const MoleculeConf& c, const std::vector<int64_t>& perm) {
  MoleculeConf out;
  out.z.resize(c.z.size());
  out.coords.resize(c.coords.size());
  for (size_t k = 0; k < perm.size(); ++k) {
    out.z[k] = c.z[static_cast<size_t>(perm[k])];
    for (int a = 0; a < 3; ++a)
      out.coords[3 * k + static_cast<size_t>(a)] =
          c.coords[static_cast<size_t>(3 * perm[k] + a)];
  }
  return out;
}

inline ModelConfig verify_config() {
  ModelConfig cfg;
  cfg.hidden = 8;
  cfg.rbf = 6;
  cfg.layers = 2;
  cfg.cutoff = 4.0;
  cfg.use_d2 = true;  // exercise every projection channel
  cfg.use_d3 = true;
  return cfg;
}

inline ModelParams verify_model(const ModelConfig& cfg, uint64_t seed) {
  return ModelParams::init(cfg, {1, 6, 7, 8, 9}, seed);
}

// Forward pass capturing frames and projections.
struct Captured {
  Tape tape;
  Batch batch;
  TapedModel m;
};

// the equal-distance-multiset pair: an end atom at 3.0 with the bond angle
// at 90 or 120 degrees; the two outer atoms never see each other at cutoff 4
inline MoleculeConf star_conf(double angle) {
  MoleculeConf c;
  c.z = {8, 1, 1};
  c.coords = {0, 0, 0, 3.0, 0, 0, 3.0 * std::cos(angle), 3.0 * std::sin(angle), 0};
  return c;
}

}  // namespace verify_detail

// ---------------------------------------------------------------------------
// suite: equivariance
// ---------------------------------------------------------------------------
// Random conformations under random O(3) x translation x permutation maps:
// the energy and every projection feature must not move; frames and forces
// must co-rotate.
inline SuiteResult verify_equivariance(uint64_t seed, int64_t n_confs = 100,
                                       int64_t n_transforms = 10) {
  using namespace verify_detail;
  const ModelConfig cfg = verify_config();
  const ModelParams params = verify_model(cfg, seed + 1);
  std::mt19937_64 rng(seed);

  double worst_e = 0.0, worst_frame = 0.0, worst_force = 0.0, worst_proj = 0.0;

  for (int64_t ci = 0; ci < n_confs; ++ci) {
    const int64_t n = 3 + static_cast<int64_t>(rng() % 18);  // 3..20 atoms
    const MoleculeConf base = random_conf(n, rng);

    Tape t0;
    const Batch b0 = Batch::make(base, cfg.cutoff);
    ForwardOptions opt;
    opt.coords_grad = true;
    const auto m0 = model_forward(t0, b0, params, cfg, opt);
    const double e0 = m0.energy.values()[0];
    auto g0 = t0.backward(sum_all(m0.energy));
    const auto f0 = g0.tensor_of(m0.coords).data;  // gradient; sign irrelevant here
    const auto fx0 = m0.frames.x.values(), fy0 = m0.frames.y.values(),
               fz0 = m0.frames.z.values();
    const auto d10 = m0.d1.values(), d20 = m0.d2.values(), d30 = m0.d3.values();

    // edge key -> row for matching edges across permutations
    std::vector<std::pair<int64_t, int64_t>> edges0(static_cast<size_t>(b0.graph.nedges()));
    for (size_t e = 0; e < edges0.size(); ++e)
      edges0[e] = {(*b0.graph.src)[e], (*b0.graph.dst)[e]};

    for (int64_t ti = 0; ti < n_transforms; ++ti) {
      const auto q = random_orthogonal(rng, rng() % 2 == 0);
      std::uniform_real_distribution<double> us(-4.0, 4.0);
      const double shift[3] = {us(rng), us(rng), us(rng)};
      std::vector<int64_t> perm(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
      std::shuffle(perm.begin(), perm.end(), rng);

      const MoleculeConf moved = permute_conf(transform_conf(base, q, shift), perm);

      Tape t1;
      const Batch b1 = Batch::make(moved, cfg.cutoff);
      const auto m1 = model_forward(t1, b1, params, cfg, opt);
      const double scale = std::abs(e0) + 1.0;
      worst_e = std::max(worst_e, std::abs(m1.energy.values()[0] - e0) / scale);

      auto g1 = t1.backward(sum_all(m1.energy));
      const auto f1 = g1.tensor_of(m1.coords).data;
      const auto fx1 = m1.frames.x.values(), fy1 = m1.frames.y.values(),
                 fz1 = m1.frames.z.values();

      for (int64_t k = 0; k < n; ++k) {
        const int64_t i = perm[static_cast<size_t>(k)];  // original index
        for (int a = 0; a < 3; ++a) {
          double rot = 0.0;
          for (int b = 0; b < 3; ++b)
            rot += q[static_cast<size_t>(a * 3 + b)] * f0[static_cast<size_t>(i * 3 + b)];
          worst_force =
              std::max(worst_force, std::abs(f1[static_cast<size_t>(k * 3 + a)] - rot));
        }
        for (int64_t ch = 0; ch < cfg.hidden; ++ch) {
          const double row0[3] = {fx0[static_cast<size_t>(i * cfg.hidden + ch)],
                                  fy0[static_cast<size_t>(i * cfg.hidden + ch)],
                                  fz0[static_cast<size_t>(i * cfg.hidden + ch)]};
          const double row1[3] = {fx1[static_cast<size_t>(k * cfg.hidden + ch)],
                                  fy1[static_cast<size_t>(k * cfg.hidden + ch)],
                                  fz1[static_cast<size_t>(k * cfg.hidden + ch)]};
          for (int a = 0; a < 3; ++a) {
            double rot = 0.0;
            for (int b = 0; b < 3; ++b) rot += q[static_cast<size_t>(a * 3 + b)] * row0[b];
            worst_frame = std::max(worst_frame, std::abs(row1[a] - rot));
          }
        }
      }

      // projections: match edge (k_src, k_dst) to original (perm[k_src], perm[k_dst])
      const auto d11 = m1.d1.values(), d21 = m1.d2.values(), d31 = m1.d3.values();
      const int64_t fcols = cfg.hidden;
      for (int64_t e1 = 0; e1 < b1.graph.nedges(); ++e1) {
        const int64_t os = perm[static_cast<size_t>((*b1.graph.src)[static_cast<size_t>(e1)])];
        const int64_t od = perm[static_cast<size_t>((*b1.graph.dst)[static_cast<size_t>(e1)])];
        const auto it = std::find(edges0.begin(), edges0.end(), std::make_pair(os, od));
        if (it == edges0.end()) {
          worst_proj = 1e9;  // topology must be preserved by rigid motion
          continue;
        }
        const int64_t e0i = it - edges0.begin();
        for (int64_t chk = 0; chk < fcols; ++chk) {
          worst_proj = std::max(worst_proj,
                                std::abs(d11[static_cast<size_t>(e1 * fcols + chk)] -
                                         d10[static_cast<size_t>(e0i * fcols + chk)]));
          worst_proj = std::max(worst_proj,
                                std::abs(d21[static_cast<size_t>(e1 * fcols + chk)] -
                                         d20[static_cast<size_t>(e0i * fcols + chk)]));
          worst_proj = std::max(worst_proj,
                                std::abs(d31[static_cast<size_t>(e1 * fcols + chk)] -
                                         d30[static_cast<size_t>(e0i * fcols + chk)]));
        }
      }
    }
  }

  SuiteResult r;
  r.name = "equivariance";
  r.metrics = {{"max_energy_rel", worst_e},
               {"max_frame_abs", worst_frame},
               {"max_force_abs", worst_force},
               {"max_projection_abs", worst_proj},
               {"confs", static_cast<double>(n_confs)}};
  r.pass = worst_e < 1e-10 && worst_frame < 1e-8 && worst_force < 1e-8 && worst_proj < 1e-10;
  return r;
}

// ---------------------------------------------------------------------------
// suite: gradcheck
// ---------------------------------------------------------------------------
// Forces against central finite differences of the energy.
inline SuiteResult verify_gradcheck(uint64_t seed, int64_t n_confs = 20) {
  using namespace verify_detail;
  const ModelConfig cfg = verify_config();
  const ModelParams params = verify_model(cfg, seed + 2);
  std::mt19937_64 rng(seed + 100);

  double worst = 0.0;
  double worst_net = 0.0;
  const double h = 1e-4;
  for (int64_t ci = 0; ci < n_confs; ++ci) {
    const int64_t n = 4 + static_cast<int64_t>(rng() % 5);  // 4..8 atoms
    MoleculeConf c = random_conf(n, rng, 5.0, 1.3);
    const auto ef = predict_energy_forces(c, params, cfg);

    double fmax = 0.0;
    for (double f : ef.forces) fmax = std::max(fmax, std::abs(f));
    double err = 0.0;
    for (size_t k = 0; k < c.coords.size(); ++k) {
      const double orig = c.coords[k];
      c.coords[k] = orig + h;
      const double ep = predict_energy(c, params, cfg);
      c.coords[k] = orig - h;
      const double em = predict_energy(c, params, cfg);
      c.coords[k] = orig;
      err = std::max(err, std::abs(-(ep - em) / (2.0 * h) - ef.forces[k]));
    }
    worst = std::max(worst, err / (fmax + 1e-12));
    for (int a = 0; a < 3; ++a) {
      double net = 0.0;
      for (int64_t i = 0; i < n; ++i) net += ef.forces[static_cast<size_t>(i * 3 + a)];
      worst_net = std::max(worst_net, std::abs(net));
    }
  }

  SuiteResult r;
  r.name = "gradcheck";
  r.metrics = {{"max_force_rel_err", worst},
               {"max_net_force", worst_net},
               {"confs", static_cast<double>(n_confs)}};
  r.pass = worst <= 1e-5 && worst_net <= 1e-9;
  return r;
}

// ---------------------------------------------------------------------------
// suite: netforce
// ---------------------------------------------------------------------------
inline SuiteResult verify_netforce(uint64_t seed, int64_t n_confs = 30) {
  using namespace verify_detail;
  const ModelConfig cfg = verify_config();
  const ModelParams params = verify_model(cfg, seed + 3);
  std::mt19937_64 rng(seed + 200);

  double worst = 0.0;
  for (int64_t ci = 0; ci < n_confs; ++ci) {
    const int64_t n = 3 + static_cast<int64_t>(rng() % 10);
    const MoleculeConf c = random_conf(n, rng);
    const auto ef = predict_energy_forces(c, params, cfg);
    for (int a = 0; a < 3; ++a) {
      double net = 0.0;
      for (int64_t i = 0; i < n; ++i) net += ef.forces[static_cast<size_t>(i * 3 + a)];
      worst = std::max(worst, std::abs(net));
    }
  }
  SuiteResult r;
  r.name = "netforce";
  r.metrics = {{"max_net_force", worst}, {"confs", static_cast<double>(n_confs)}};
  r.pass = worst <= 1e-9;
  return r;
}

// ---------------------------------------------------------------------------
// suite: cancellation — centrosymmetric environments zero the frame exactly
// ---------------------------------------------------------------------------
inline SuiteResult verify_cancellation(uint64_t seed) {
  using namespace verify_detail;
  const ModelConfig cfg = verify_config();
  const ModelParams params = verify_model(cfg, seed + 4);

  double worst = 0.0;
  const auto frame_mag_at = [&](const MoleculeConf& c, int64_t atom) {
    Tape t;
    const auto m = model_forward(t, Batch::make(c, cfg.cutoff), params, cfg);
    const auto fx = m.frames.x.values(), fy = m.frames.y.values(), fz = m.frames.z.values();
    double mag = 0.0;
    for (int64_t ch = 0; ch < cfg.hidden; ++ch) {
      mag = std::max(mag, std::abs(fx[static_cast<size_t>(atom * cfg.hidden + ch)]));
      mag = std::max(mag, std::abs(fy[static_cast<size_t>(atom * cfg.hidden + ch)]));
      mag = std::max(mag, std::abs(fz[static_cast<size_t>(atom * cfg.hidden + ch)]));
    }
    return mag;
  };

  // symmetric pair on a line
  MoleculeConf aba;
  aba.z = {1, 8, 1};
  aba.coords = {-1.5, 0, 0, 0, 0, 0, 1.5, 0, 0};
  worst = std::max(worst, frame_mag_at(aba, 1));

  // regular octahedron around a center
  MoleculeConf oct;
  oct.z = {8, 1, 1, 1, 1, 1, 1};
  oct.coords = {0, 0, 0, 2, 0, 0, -2, 0, 0, 0, 2, 0, 0, -2, 0, 0, 0, 2, 0, 0, -2};
  worst = std::max(worst, frame_mag_at(oct, 0));

  // asymmetric control: the same operator must NOT vanish off-symmetry
  MoleculeConf ctrl;
  ctrl.z = {8, 1, 6};
  ctrl.coords = {0, 0, 0, 1.4, 0.3, 0, -0.8, 1.1, 0.5};
  const double control = frame_mag_at(ctrl, 0);

  SuiteResult r;
  r.name = "cancellation";
  r.metrics = {{"max_centro_frame", worst}, {"asym_control_frame", control}};
  r.pass = worst <= 1e-12 && control > 1e-6;
  return r;
}

// ---------------------------------------------------------------------------
// suite: globaldegen — pooled frames can die where local frames survive
// ---------------------------------------------------------------------------
inline SuiteResult verify_globaldegen(uint64_t seed) {
  using namespace verify_detail;
  const ModelConfig cfg = verify_config();
  const ModelParams params = verify_model(cfg, seed + 5);

  // regular hexagon, radius 3, every vertex within cutoff of its neighbors
  MoleculeConf hex;
  for (int k = 0; k < 6; ++k) {
    hex.z.push_back(6);
    const double ang = M_PI / 3.0 * k;
    hex.coords.insert(hex.coords.end(), {3.0 * std::cos(ang), 3.0 * std::sin(ang), 0.0});
  }

  Tape t;
  const auto m = model_forward(t, Batch::make(hex, cfg.cutoff), params, cfg);
  const auto frames = frame_tensors(m.frames);

  // global frame: sum of all per-atom frames
  Tensor global(cfg.hidden, 3);
  for (const auto& fr : frames)
    for (size_t k = 0; k < global.data.size(); ++k) global.data[k] += fr.data[k];
  const auto sv = frame_singular_values(global);
  const int64_t grank = frame_rank(global);

  int64_t min_local_rank = 3;
  for (const auto& fr : frames)
    min_local_rank = std::min(min_local_rank, static_cast<int64_t>(frame_rank(fr)));

  // generic random conformations: every atom whose neighbor directions span
  // 3D must carry a rank-3 frame
  std::mt19937_64 rng(seed + 300);
  int64_t checked = 0, full_rank = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const MoleculeConf c = random_conf(7, rng, 5.0, 1.3);
    Tape tr;
    const NeighborGraph g = build_neighbor_graph(c, cfg.cutoff);
    const auto mr = model_forward(tr, Batch::make(c, cfg.cutoff), params, cfg);
    const auto fr = frame_tensors(mr.frames);
    for (int64_t i = 0; i < c.natoms(); ++i) {
      // rank of the neighbor-direction span
      std::vector<double> dir_data;
      for (size_t e = 0; e < g.src->size(); ++e)
        if ((*g.src)[e] == i)
          for (int a = 0; a < 3; ++a)
            dir_data.push_back(g.unit[static_cast<size_t>(e * 3 + a)]);
      const int64_t nd = static_cast<int64_t>(dir_data.size() / 3);
      if (nd < 3) continue;
      const Tensor dirs(nd, 3, dir_data);
      if (frame_rank(dirs) < 3) continue;
      ++checked;
      if (frame_rank(fr[static_cast<size_t>(i)]) == 3) ++full_rank;
    }
  }

  SuiteResult r;
  r.name = "globaldegen";
  r.metrics = {{"hexagon_global_sigma_max", sv[0]},
               {"hexagon_global_rank", static_cast<double>(grank)},
               {"hexagon_min_local_rank", static_cast<double>(min_local_rank)},
               {"generic_atoms_checked", static_cast<double>(checked)},
               {"generic_atoms_rank3", static_cast<double>(full_rank)}};
  r.pass = grank < 3 && sv[0] <= 1e-12 && min_local_rank >= 1 && checked > 0 &&
           full_rank == checked;
  return r;
}

// ---------------------------------------------------------------------------
// suite: separation — equal distance multisets: blind without projections,
// separated with them; plus a signed statistic that flips if the center
// projection's sign convention is inverted
// ---------------------------------------------------------------------------
inline SuiteResult verify_separation(uint64_t seed, int64_t n_seeds = 10) {
  using namespace verify_detail;
  const MoleculeConf a = star_conf(M_PI / 2.0);
  const MoleculeConf b = star_conf(2.0 * M_PI / 3.0);

  double max_blind_diff = 0.0;
  double min_separation = std::numeric_limits<double>::infinity();
  for (int64_t s = 0; s < n_seeds; ++s) {
    ModelConfig cfg = verify_config();
    cfg.use_d2 = false;

    cfg.schnet_mode = true;
    const auto ps = ModelParams::init(cfg, {1, 8}, seed + 10 + static_cast<uint64_t>(s));
    max_blind_diff = std::max(
        max_blind_diff, std::abs(predict_energy(a, ps, cfg) - predict_energy(b, ps, cfg)));

    cfg.schnet_mode = false;
    const auto pf = ModelParams::init(cfg, {1, 8}, seed + 10 + static_cast<uint64_t>(s));
    min_separation = std::min(
        min_separation, std::abs(predict_energy(a, pf, cfg) - predict_energy(b, pf, cfg)));
  }

  // Signed statistic: mean center-projection over the right-angle star with
  // unit node scalars and unit filters. All four directed edges project to
  // exactly cutoff_weight(3, 4) when the center projection points
  // neighbor-to-center; a sign inversion in that projection flips the mean.
  const MoleculeConf star = star_conf(M_PI / 2.0);
  const NeighborGraph g = build_neighbor_graph(star, 4.0);
  Tape t;
  const Var coords = t.constant(Tensor(star.natoms(), 3, star.coords));
  const auto eg = edge_geometry(t, coords, g);
  const auto frames =
      generate_frames(t, g, t.constant(Tensor::full(star.natoms(), 1, 1.0)),
                      t.constant(Tensor::full(g.nedges(), 1, 1.0)), eg.weight, eg.unit);
  const Var d1 = project_d1(t, g, frames, eg.unit);
  double mean_d1 = 0.0;
  for (const double v : d1.values()) mean_d1 += v;
  mean_d1 /= static_cast<double>(g.nedges());
  const double expected = cutoff_weight(3.0, 4.0);

  SuiteResult r;
  r.name = "separation";
  r.metrics = {{"max_blind_diff", max_blind_diff},
               {"min_separation", min_separation},
               {"signed_star_d1_mean", mean_d1},
               {"signed_star_d1_expected", expected},
               {"seeds", static_cast<double>(n_seeds)}};
  r.pass = max_blind_diff <= 1e-12 && min_separation >= 1e-6 &&
           std::abs(mean_d1 - expected) <= 1e-9;
  return r;
}

// ---------------------------------------------------------------------------
// suite: relpool — the permutation-pooling oracle
// ---------------------------------------------------------------------------
inline SuiteResult verify_relpool(uint64_t seed) {
  using namespace verify_detail;
  std::mt19937_64 rng(seed + 400);

  // deliberately order-sensitive functional of a conformation
  const auto fn = [](const MoleculeConf& c) {
    double v = 0.0;
    for (int64_t i = 0; i < c.natoms(); ++i) {
      const double w = static_cast<double>(i + 1);
      v += w * (static_cast<double>(c.z[static_cast<size_t>(i)]) + 0.3 * c.coord(i, 0) +
                0.7 * c.coord(i, 1) * c.coord(i, 2));
    }
    return std::sin(v) + 0.01 * v;
  };

  double worst_vs_enum = 0.0;
  double worst_invariance = 0.0;
  for (const int64_t n : {3LL, 4LL, 5LL}) {
    const MoleculeConf c = random_conf(n, rng, 5.0, 1.3);
    const double pooled = relational_pool_reference(c, fn);

    // independent enumeration: average fn over every permutation of the
    // input directly, no canonicalization
    std::vector<int64_t> perm(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    std::sort(perm.begin(), perm.end());
    double sum = 0.0;
    int64_t count = 0;
    do {
      sum += fn(permute_conf(c, perm));
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    worst_vs_enum = std::max(worst_vs_enum, std::abs(pooled - sum / count));

    // exact invariance across shuffled presentations
    for (int rep = 0; rep < 4; ++rep) {
      std::shuffle(perm.begin(), perm.end(), rng);
      const double again = relational_pool_reference(permute_conf(c, perm), fn);
      worst_invariance = std::max(worst_invariance, std::abs(again - pooled));
    }
  }

  SuiteResult r;
  r.name = "relpool";
  r.metrics = {{"max_vs_enumeration", worst_vs_enum},
               {"max_order_sensitivity", worst_invariance}};
  r.pass = worst_vs_enum <= 1e-12 && worst_invariance == 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// suite: cutoffsmooth — sweeping an atom across the cutoff is gentle
// ---------------------------------------------------------------------------
inline SuiteResult verify_cutoffsmooth(uint64_t seed) {
  using namespace verify_detail;
  const ModelConfig cfg = verify_config();
  const ModelParams params = verify_model(cfg, seed + 6);

  // center with one firm neighbor; a third atom marches across the cutoff
  double worst_frame_step = 0.0, worst_energy_step = 0.0;
  std::vector<double> prev_frames;
  double prev_energy = 0.0;
  bool first = true;
  const double h = 1e-4;
  for (double r = cfg.cutoff - 0.01; r <= cfg.cutoff + 0.01 + 1e-12; r += h) {
    MoleculeConf c;
    c.z = {8, 1, 1};
    // atom 2 sits exactly at distance r from the center, well away from atom 1
    c.coords = {0, 0, 0, 1.5, 0, 0, -0.8 * r, 0.6 * r, 0};

    Tape t;
    const auto m = model_forward(t, Batch::make(c, cfg.cutoff), params, cfg);
    std::vector<double> cur;
    const auto fx = m.frames.x.values(), fy = m.frames.y.values(), fz = m.frames.z.values();
    cur.insert(cur.end(), fx.begin(), fx.end());
    cur.insert(cur.end(), fy.begin(), fy.end());
    cur.insert(cur.end(), fz.begin(), fz.end());
    const double e = m.energy.values()[0];

    if (!first) {
      for (size_t k = 0; k < cur.size(); ++k)
        worst_frame_step = std::max(worst_frame_step, std::abs(cur[k] - prev_frames[k]));
      worst_energy_step = std::max(worst_energy_step, std::abs(e - prev_energy));
    }
    prev_frames = std::move(cur);
    prev_energy = e;
    first = false;
  }

  SuiteResult r;
  r.name = "cutoffsmooth";
  r.metrics = {{"max_frame_step", worst_frame_step}, {"max_energy_step", worst_energy_step}};
  r.pass = worst_frame_step < 1e-6 && worst_energy_step < 1e-6;
  return r;
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

inline std::vector<std::string> verify_suite_names() {
  return {"equivariance", "gradcheck", "netforce",    "cancellation",
          "globaldegen",  "separation",     "relpool",     "cutoffsmooth"};
}

inline SuiteResult run_verify_suite(const std::string& name, uint64_t seed = 0) {
  if (name == "equivariance") return verify_equivariance(seed);
  if (name == "gradcheck") return verify_gradcheck(seed);
  if (name == "netforce") return verify_netforce(seed);
  if (name == "cancellation") return verify_cancellation(seed);
  if (name == "globaldegen") return verify_globaldegen(seed);
  if (name == "separation") return verify_separation(seed);
  if (name == "relpool") return verify_relpool(seed);
  if (name == "cutoffsmooth") return verify_cutoffsmooth(seed);
  throw std::invalid_argument("unknown verification suite '" + name + "'");
}

inline std::vector<SuiteResult> run_verify_suites(const std::vector<std::string>& names,
                                                  uint64_t seed = 0) {
  std::vector<SuiteResult> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(run_verify_suite(n, seed));
  return out;
}

}  // namespace gnnlf
