#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "gnnlf/geometry.hpp"

using namespace gnnlf;

namespace {

MoleculeConf random_conf(int64_t n, uint64_t seed, double box = 6.0, double min_sep = 1.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, box);
  std::uniform_int_distribution<int64_t> zs(1, 9);
  MoleculeConf c;
  while (c.natoms() < n) {
    const double x = u(rng), y = u(rng), z = u(rng);
    bool ok = true;
    for (int64_t i = 0; i < c.natoms() && ok; ++i) {
      const double dx = c.coord(i, 0) - x, dy = c.coord(i, 1) - y, dz = c.coord(i, 2) - z;
      if (dx * dx + dy * dy + dz * dz < min_sep * min_sep) ok = false;
    }
    if (!ok) continue;
    c.z.push_back(zs(rng));
    c.coords.insert(c.coords.end(), {x, y, z});
  }
  return c;
}

// Random orthogonal 3x3 (rotation or roto-reflection) via Gram-Schmidt.
std::array<double, 9> random_orthogonal(uint64_t seed, bool reflect) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> ndist(0.0, 1.0);
  std::array<double, 9> q{};
  for (auto& v : q) v = ndist(rng);
  for (int pass = 0; pass < 2; ++pass)
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < i; ++j) {
        double d = 0;
        for (int k = 0; k < 3; ++k) d += q[i * 3 + k] * q[j * 3 + k];
        for (int k = 0; k < 3; ++k) q[i * 3 + k] -= d * q[j * 3 + k];
      }
      double norm = 0;
      for (int k = 0; k < 3; ++k) norm += q[i * 3 + k] * q[i * 3 + k];
      norm = std::sqrt(norm);
      for (int k = 0; k < 3; ++k) q[i * 3 + k] /= norm;
    }
  if (reflect)
    for (int k = 0; k < 3; ++k) q[6 + k] = -q[6 + k];
  return q;
}

MoleculeConf transform(const MoleculeConf& c, const std::array<double, 9>& q,
                       const std::array<double, 3>& shift) {
  MoleculeConf out = c;
  for (int64_t i = 0; i < c.natoms(); ++i)
    for (int64_t a = 0; a < 3; ++a) {
      double v = shift[static_cast<size_t>(a)];
      for (int64_t b = 0; b < 3; ++b) v += q[static_cast<size_t>(a * 3 + b)] * c.coord(i, b);
      out.coords[static_cast<size_t>(i * 3 + a)] = v;
    }
  return out;
}

}  // namespace

TEST_CASE("element table lookups") {
  CHECK(atomic_number("H") == 1);
  CHECK(atomic_number("C") == 6);
  CHECK(atomic_number("Cl") == 17);
  CHECK(std::string(element_symbol(8)) == "O");
  CHECK(atomic_mass(1) == Catch::Approx(1.008));
  CHECK(atomic_mass(6) == Catch::Approx(12.011));
  CHECK_THROWS_WITH(atomic_number("Xx"), Catch::Matchers::ContainsSubstring("unknown element"));
  CHECK_THROWS_AS(element_symbol(0), std::invalid_argument);
  CHECK_THROWS_AS(atomic_mass(999), std::invalid_argument);
}

TEST_CASE("cutoff envelope values and smoothness") {
  CHECK(cutoff_weight(0.0, 4.0) == 1.0);
  CHECK(cutoff_weight(4.0, 4.0) == 0.0);
  CHECK(cutoff_weight(5.0, 4.0) == 0.0);
  CHECK(cutoff_weight(2.0, 4.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(cutoff_weight(1.5, 2.0) == Catch::Approx(0.14644660940672627).epsilon(1e-14));

  // Value and slope both vanish at the boundary: stepping r by 1e-4 around
  // r_cut changes the envelope by far less than crossing a hard cutoff would.
  const double rc = 4.0, h = 1e-4;
  double max_step = 0.0;
  for (double r = rc - 0.003; r < rc + 0.003; r += h)
    max_step = std::max(max_step, std::abs(cutoff_weight(r + h, rc) - cutoff_weight(r, rc)));
  CHECK(max_step < 1e-6);
  CHECK(cutoff_weight(rc - 1e-4, rc) < 1e-8);

  CHECK_THROWS_AS(cutoff_weight(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("radial basis value and initialization") {
  CHECK(rbf_value(1.0, 1.0, 0.5) == Catch::Approx(0.9826956285165181).epsilon(1e-14));
  CHECK(rbf_value(0.0, 2.0, 1.0) == 1.0);  // exp(-0) - 1 = 0

  SECTION("centers equally spaced on [exp(-r_cut), 1]") {
    const auto init = rbf_init(4, 5.0);
    const double lo = std::exp(-5.0);
    CHECK(init.mu.data[0] == Catch::Approx(lo).epsilon(1e-14));
    CHECK(init.mu.data[1] == Catch::Approx(0.3378252979993903).epsilon(1e-13));
    CHECK(init.mu.data[3] == 1.0);
    for (double b : init.beta.data) CHECK(b == Catch::Approx(4.054453311145985).epsilon(1e-13));
  }
  SECTION("single basis function sits at the midpoint") {
    const auto init = rbf_init(1, 4.0);
    CHECK(init.mu.data[0] == Catch::Approx(0.5091578194443671).epsilon(1e-14));
  }
  CHECK_THROWS_AS(rbf_init(0, 4.0), std::invalid_argument);
}

TEST_CASE("neighbor graph on a three-atom line") {
  MoleculeConf c;
  c.z = {6, 8, 1};
  c.coords = {0, 0, 0, 1.5, 0, 0, 10, 0, 0};
  const auto g = build_neighbor_graph(c, 2.0);
  REQUIRE(g.nedges() == 2);
  CHECK(*g.src == std::vector<int64_t>{0, 1});
  CHECK(*g.dst == std::vector<int64_t>{1, 0});
  CHECK(g.dist[0] == Catch::Approx(1.5).epsilon(1e-15));
  // unit vector points from neighbor toward center
  CHECK(g.unit[0] == Catch::Approx(-1.0));
  CHECK(g.unit[3] == Catch::Approx(1.0));
  CHECK(g.weight[0] == Catch::Approx(0.14644660940672627).epsilon(1e-14));
}

TEST_CASE("neighbor graph matches a brute-force oracle and is ordered") {
  const auto c = random_conf(12, 17);
  const double rc = 3.0;
  const auto g = build_neighbor_graph(c, rc);

  std::set<std::pair<int64_t, int64_t>> expect;
  for (int64_t i = 0; i < c.natoms(); ++i)
    for (int64_t j = 0; j < c.natoms(); ++j) {
      if (i == j) continue;
      double d2 = 0;
      for (int64_t a = 0; a < 3; ++a) {
        const double d = c.coord(i, a) - c.coord(j, a);
        d2 += d * d;
      }
      if (std::sqrt(d2) < rc) expect.insert({i, j});
    }
  REQUIRE(g.nedges() == static_cast<int64_t>(expect.size()));
  for (int64_t e = 0; e < g.nedges(); ++e) {
    CHECK(expect.count({(*g.src)[static_cast<size_t>(e)], (*g.dst)[static_cast<size_t>(e)]}) == 1);
    if (e > 0) {
      const auto prev = std::make_pair((*g.src)[static_cast<size_t>(e - 1)], (*g.dst)[static_cast<size_t>(e - 1)]);
      const auto cur = std::make_pair((*g.src)[static_cast<size_t>(e)], (*g.dst)[static_cast<size_t>(e)]);
      CHECK(prev < cur);  // lexicographic edge order
    }
  }

  SECTION("each directed edge has its reverse, with opposite direction") {
    for (int64_t e = 0; e < g.nedges(); ++e) {
      const int64_t i = (*g.src)[static_cast<size_t>(e)], j = (*g.dst)[static_cast<size_t>(e)];
      bool found = false;
      for (int64_t f = 0; f < g.nedges(); ++f)
        if ((*g.src)[static_cast<size_t>(f)] == j && (*g.dst)[static_cast<size_t>(f)] == i) {
          found = true;
          CHECK(g.dist[static_cast<size_t>(f)] == Catch::Approx(g.dist[static_cast<size_t>(e)]).epsilon(1e-15));
          for (int64_t a = 0; a < 3; ++a)
            CHECK(g.unit[static_cast<size_t>(f * 3 + a)] ==
                  Catch::Approx(-g.unit[static_cast<size_t>(e * 3 + a)]).margin(1e-15));
        }
      CHECK(found);
    }
  }
}

TEST_CASE("graph scalars are invariant and directions equivariant under rigid motions") {
  const auto c = random_conf(10, 23);
  const double rc = 3.5;
  const auto g = build_neighbor_graph(c, rc);

  for (const bool reflect : {false, true}) {
    const auto q = random_orthogonal(reflect ? 41 : 40, reflect);
    const auto ct = transform(c, q, {1.7, -0.4, 2.9});
    const auto gt = build_neighbor_graph(ct, rc);
    REQUIRE(gt.nedges() == g.nedges());
    for (int64_t e = 0; e < g.nedges(); ++e) {
      CHECK((*gt.src)[static_cast<size_t>(e)] == (*g.src)[static_cast<size_t>(e)]);
      CHECK((*gt.dst)[static_cast<size_t>(e)] == (*g.dst)[static_cast<size_t>(e)]);
      CHECK(gt.dist[static_cast<size_t>(e)] == Catch::Approx(g.dist[static_cast<size_t>(e)]).epsilon(1e-12));
      CHECK(gt.weight[static_cast<size_t>(e)] == Catch::Approx(g.weight[static_cast<size_t>(e)]).margin(1e-12));
      for (int64_t a = 0; a < 3; ++a) {
        double rotated = 0.0;
        for (int64_t b = 0; b < 3; ++b)
          rotated += q[static_cast<size_t>(a * 3 + b)] * g.unit[static_cast<size_t>(e * 3 + b)];
        CHECK(gt.unit[static_cast<size_t>(e * 3 + a)] == Catch::Approx(rotated).margin(1e-12));
      }
    }
  }
}

TEST_CASE("degenerate inputs are rejected or empty") {
  MoleculeConf overlapping;
  overlapping.z = {1, 1};
  overlapping.coords = {0, 0, 0, 1e-8, 0, 0};
  CHECK_THROWS_WITH(build_neighbor_graph(overlapping, 4.0),
                    Catch::Matchers::ContainsSubstring("minimum separation"));

  MoleculeConf lone;
  lone.z = {6};
  lone.coords = {0, 0, 0};
  CHECK(build_neighbor_graph(lone, 4.0).nedges() == 0);

  MoleculeConf distant;
  distant.z = {6, 6};
  distant.coords = {0, 0, 0, 100, 0, 0};
  CHECK(build_neighbor_graph(distant, 4.0).nedges() == 0);

  MoleculeConf bad;
  bad.z = {6, 99};
  bad.coords = {0, 0, 0, 2, 0, 0};
  CHECK_THROWS_WITH(build_neighbor_graph(bad, 4.0),
                    Catch::Matchers::ContainsSubstring("out of supported range"));
}

TEST_CASE("numeric radial features match the scalar formula") {
  const auto c = random_conf(8, 5);
  const auto g = build_neighbor_graph(c, 3.5);
  const auto init = rbf_init(6, 3.5);
  const Tensor feat = rbf_features(g, init.beta, init.mu);
  REQUIRE(feat.rows == g.nedges());
  REQUIRE(feat.cols == 6);
  for (int64_t e = 0; e < feat.rows; ++e)
    for (int64_t k = 0; k < feat.cols; ++k)
      CHECK(feat.at(e, k) == rbf_value(g.dist[static_cast<size_t>(e)],
                                       init.beta.data[static_cast<size_t>(k)],
                                       init.mu.data[static_cast<size_t>(k)]));
}

TEST_CASE("taped edge featurization reproduces the numeric graph and differentiates") {
  const auto c = random_conf(7, 31);
  const auto g = build_neighbor_graph(c, 3.5);
  REQUIRE(g.nedges() > 0);

  Tensor coords(c.natoms(), 3, c.coords);
  Tape t;
  Var cv = t.leaf(coords);
  const auto eg = edge_geometry(t, cv, g);
  for (int64_t e = 0; e < g.nedges(); ++e) {
    CHECK(eg.dist.values()[static_cast<size_t>(e)] ==
          Catch::Approx(g.dist[static_cast<size_t>(e)]).epsilon(1e-14));
    CHECK(eg.weight.values()[static_cast<size_t>(e)] ==
          Catch::Approx(g.weight[static_cast<size_t>(e)]).margin(1e-14));
    for (int64_t a = 0; a < 3; ++a)
      CHECK(eg.unit.values()[static_cast<size_t>(e * 3 + a)] ==
            Catch::Approx(g.unit[static_cast<size_t>(e * 3 + a)]).margin(1e-14));
  }

  const auto init = rbf_init(4, 3.5);
  SECTION("radial features agree with the numeric path") {
    Var rb = rbf_expand(t, eg.dist, t.constant(init.beta), t.constant(init.mu));
    const Tensor numeric = rbf_features(g, init.beta, init.mu);
    for (size_t i = 0; i < numeric.data.size(); ++i)
      CHECK(rb.values()[i] == Catch::Approx(numeric.data[i]).epsilon(1e-14));
  }

  SECTION("gradients of an edge-based scalar pass the finite-difference check") {
    auto f = [&](Tape& tape, Var v) {
      const auto e = edge_geometry(tape, v, g);
      Var rb = rbf_expand(tape, e.dist, tape.constant(init.beta), tape.constant(init.mu));
      return sum_all(e.weight * sum_cols(rb)) + sum_all(e.unit * e.unit) * 0.25;
    };
    CHECK(grad_check(f, coords, 1e-5) < 1e-7);
  }
}
