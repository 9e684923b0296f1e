#pragma once
// Synthetic desk-scale datasets with closed-form energies and exact (or
// near-exact finite-difference) force labels.
//
//  * lj_dataset: a 4-atom Lennard-Jones-like cluster around its minimum;
//    analytic pair forces.
//  * torsion_dataset: a 4-atom A-B-B-A chain, exactly C2-symmetric, whose
//    energy contains a strong dihedral term. Geometry keeps the two end
//    atoms farther apart than any usable cutoff <= 4 while every chain
//    neighbor stays visible, so orientation-carrying features are the
//    natural channel for the torsion signal.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "gnnlf/geometry.hpp"

namespace gnnlf::testdata {

// ---------------------------------------------------------------------------
// Lennard-Jones cluster
// ---------------------------------------------------------------------------

inline constexpr double kLjSigma = 1.2;
inline constexpr double kLjEps = 1.0;

inline double lj_energy(const std::vector<double>& coords) {
  const int64_t n = static_cast<int64_t>(coords.size() / 3);
  double e = 0.0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = i + 1; j < n; ++j) {
      double rr = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double d = coords[static_cast<size_t>(i * 3 + a)] -
                         coords[static_cast<size_t>(j * 3 + a)];
        rr += d * d;
      }
      const double s6 = std::pow(kLjSigma * kLjSigma / rr, 3.0);
      e += 4.0 * kLjEps * (s6 * s6 - s6);
    }
  return e;
}

inline std::vector<double> lj_forces(const std::vector<double>& coords) {
  const int64_t n = static_cast<int64_t>(coords.size() / 3);
  std::vector<double> f(coords.size(), 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = i + 1; j < n; ++j) {
      double d[3], rr = 0.0;
      for (int a = 0; a < 3; ++a) {
        d[a] = coords[static_cast<size_t>(i * 3 + a)] - coords[static_cast<size_t>(j * 3 + a)];
        rr += d[a] * d[a];
      }
      const double s6 = std::pow(kLjSigma * kLjSigma / rr, 3.0);
      // -dE/dr * (1/r) for the pair, applied along the displacement
      const double coef = 24.0 * kLjEps * (2.0 * s6 * s6 - s6) / rr;
      for (int a = 0; a < 3; ++a) {
        f[static_cast<size_t>(i * 3 + a)] += coef * d[a];
        f[static_cast<size_t>(j * 3 + a)] -= coef * d[a];
      }
    }
  return f;
}

// n perturbed copies of a near-minimum argon-like cluster (a regular
// tetrahedron, or an equilateral triangle for natoms == 3), with energies and
// analytic forces attached.
inline std::vector<MoleculeConf> lj_dataset(size_t n, uint64_t seed, int natoms = 4) {
  if (natoms != 3 && natoms != 4)
    throw std::invalid_argument("cluster generator supports 3 or 4 atoms");
  // edge length ~ the pair-potential minimum
  const double rmin_edge = 1.122462048309373 * kLjSigma;
  const double s = rmin_edge / (2.0 * std::sqrt(2.0));
  const double t = rmin_edge / std::sqrt(3.0);  // circumradius of the triangle
  std::vector<double> base;
  if (natoms == 4)
    base = {s, s, s, s, -s, -s, -s, s, -s, -s, -s, s};
  else
    base = {t, 0, 0, -t / 2, t * std::sqrt(3.0) / 2, 0, -t / 2, -t * std::sqrt(3.0) / 2, 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);

  std::vector<MoleculeConf> out;
  out.reserve(n);
  while (out.size() < n) {
    MoleculeConf c;
    c.z.assign(static_cast<size_t>(natoms), 18);
    c.coords.resize(base.size());
    for (size_t k = 0; k < base.size(); ++k) c.coords[k] = base[k] + jitter(rng);
    // keep the repulsive wall out of the data: resample tight geometries
    double rmin = 1e9;
    for (int i = 0; i < natoms; ++i)
      for (int j = i + 1; j < natoms; ++j) {
        double rr = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double d = c.coords[static_cast<size_t>(i * 3 + a)] -
                           c.coords[static_cast<size_t>(j * 3 + a)];
          rr += d * d;
        }
        rmin = std::min(rmin, std::sqrt(rr));
      }
    if (rmin < 0.94 * kLjSigma) continue;
    c.energy = lj_energy(c.coords);
    c.forces = lj_forces(c.coords);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Torsion chain
// ---------------------------------------------------------------------------

namespace detail {

inline void cross3(const double a[3], const double b[3], double out[3]) {
  out[0] = a[1] * b[2] - a[2] * b[1];
  out[1] = a[2] * b[0] - a[0] * b[2];
  out[2] = a[0] * b[1] - a[1] * b[0];
}

inline double dot3(const double a[3], const double b[3]) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace detail

// Closed-form chain energy: bond springs, angle springs at both central
// atoms, and a two-term dihedral potential (even in the dihedral, as any
// rotation-invariant function must be).
inline double torsion_energy(const std::vector<double>& coords) {
  if (coords.size() != 12) throw std::invalid_argument("torsion chain expects 4 atoms");
  const double* a1 = coords.data() + 0;
  const double* b1 = coords.data() + 3;
  const double* b2 = coords.data() + 6;
  const double* a2 = coords.data() + 9;

  auto dist = [](const double* p, const double* q) {
    double rr = 0.0;
    for (int k = 0; k < 3; ++k) rr += (p[k] - q[k]) * (p[k] - q[k]);
    return std::sqrt(rr);
  };
  const double d_ab1 = dist(a1, b1);
  const double d_bb = dist(b1, b2);
  const double d_ab2 = dist(b2, a2);

  auto cos_angle = [](const double* center, const double* p, const double* q) {
    double u[3], v[3];
    for (int k = 0; k < 3; ++k) {
      u[k] = p[k] - center[k];
      v[k] = q[k] - center[k];
    }
    return detail::dot3(u, v) / (std::sqrt(detail::dot3(u, u)) * std::sqrt(detail::dot3(v, v)));
  };
  const double cb1 = cos_angle(b1, a1, b2);
  const double cb2 = cos_angle(b2, b1, a2);

  // dihedral cosine via the two plane normals
  double u1[3], u2[3], u3[3], n1[3], n2[3];
  for (int k = 0; k < 3; ++k) {
    u1[k] = b1[k] - a1[k];
    u2[k] = b2[k] - b1[k];
    u3[k] = a2[k] - b2[k];
  }
  detail::cross3(u1, u2, n1);
  detail::cross3(u2, u3, n2);
  const double cphi = detail::dot3(n1, n2) /
                      (std::sqrt(detail::dot3(n1, n1)) * std::sqrt(detail::dot3(n2, n2)));
  const double c2phi = 2.0 * cphi * cphi - 1.0;

  const double ceq = std::cos(109.5 * M_PI / 180.0);
  return 8.0 * (d_ab1 - 1.2) * (d_ab1 - 1.2) + 8.0 * (d_ab2 - 1.2) * (d_ab2 - 1.2) +
         6.0 * (d_bb - 3.4) * (d_bb - 3.4) + 4.0 * (cb1 - ceq) * (cb1 - ceq) +
         4.0 * (cb2 - ceq) * (cb2 - ceq) + 1.2 * (1.0 - cphi) + 0.6 * (1.0 - c2phi);
}

inline std::vector<double> torsion_forces(const std::vector<double>& coords, double h = 1e-5) {
  std::vector<double> f(coords.size());
  std::vector<double> probe = coords;
  for (size_t i = 0; i < coords.size(); ++i) {
    probe[i] = coords[i] + h;
    const double ep = torsion_energy(probe);
    probe[i] = coords[i] - h;
    const double em = torsion_energy(probe);
    probe[i] = coords[i];
    f[i] = -(ep - em) / (2.0 * h);
  }
  return f;
}

// One exactly C2-symmetric chain geometry: half-length `a` of the central
// bond, end-bond length `r`, end-bond polar angle `theta` off the axis, and
// dihedral `phi` split evenly across the two ends so the two-fold rotation
// about y maps the molecule onto itself.
inline MoleculeConf torsion_conf(double a, double r, double theta, double phi) {
  MoleculeConf c;
  c.z = {1, 8, 8, 1};
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ch = std::cos(phi / 2.0), sh = std::sin(phi / 2.0);
  c.coords = {
      -a - r * ct, r * st * ch, r * st * sh,   // A1
      -a,          0.0,         0.0,           // B1
      a,           0.0,         0.0,           // B2
      a + r * ct,  r * st * ch, -r * st * sh,  // A2
  };
  return c;
}

// n chains with jittered bonds/angles and a uniformly swept dihedral. End
// atoms stay separated by more than 4 in every sample while all chain bonds
// and second neighbors stay below 3.9.
inline std::vector<MoleculeConf> torsion_dataset(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> da(-0.02, 0.02);
  std::uniform_real_distribution<double> dr(-0.03, 0.03);
  std::uniform_real_distribution<double> dth(-2.0 * M_PI / 180.0, 2.0 * M_PI / 180.0);
  std::uniform_real_distribution<double> dphi(0.0, 2.0 * M_PI);

  std::vector<MoleculeConf> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const double a = 1.70 + da(rng);
    const double r = 1.20 + dr(rng);
    const double theta = 70.5 * M_PI / 180.0 + dth(rng);
    const double phi = dphi(rng);
    MoleculeConf c = torsion_conf(a, r, theta, phi);
    c.energy = torsion_energy(c.coords);
    c.forces = torsion_forces(c.coords);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace gnnlf::testdata
