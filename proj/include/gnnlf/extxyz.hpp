#pragma once
// Extended-XYZ reader/writer.
//
// Per frame: line 1 holds the atom count N, line 2 holds whitespace-separated
// key=value pairs — optionally `energy=<float>` plus a column descriptor
// `Properties=species:S:1:pos:R:3[:forces:R:3]` — followed by N body lines
// `<symbol> x y z [fx fy fz]`. All floats are parsed as binary64; the writer
// emits %.17g so a write/read round-trip is value-preserving.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace gnnlf {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline double parse_f64_token(const std::string& tok, int64_t line_no, const char* what) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw std::runtime_error("extended-xyz parse error at line " + std::to_string(line_no) +
                             ": bad " + std::string(what) + " value '" + tok + "'");
  }
  return v;
}

[[noreturn]] inline void xyz_error(int64_t line_no, int64_t frame, const std::string& msg) {
  throw std::runtime_error("extended-xyz parse error at line " + std::to_string(line_no) +
                           " (frame " + std::to_string(frame) + "): " + msg);
}

}  // namespace detail

// Reads every frame of an extended-XYZ file. Frames may carry an energy and a
// per-atom force block; both are optional and recorded only when present.
inline std::vector<MoleculeConf> load_extxyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open extended-xyz file '" + path + "'");

  std::vector<MoleculeConf> frames;
  std::string line;
  int64_t line_no = 0;

  while (true) {
    // ---- line 1: atom count (blank lines at end of file are tolerated) ----
    int64_t natoms = -1;
    bool got_count = false;
    while (std::getline(in, line)) {
      ++line_no;
      const auto toks = detail::split_ws(line);
      if (toks.empty()) continue;  // skip stray blank lines between frames
      if (toks.size() != 1) detail::xyz_error(line_no, static_cast<int64_t>(frames.size()),
                                              "expected a lone atom count, got '" + line + "'");
      char* end = nullptr;
      const long long n = std::strtoll(toks[0].c_str(), &end, 10);
      if (end == toks[0].c_str() || *end != '\0' || n <= 0)
        detail::xyz_error(line_no, static_cast<int64_t>(frames.size()),
                          "invalid atom count '" + toks[0] + "'");
      natoms = static_cast<int64_t>(n);
      got_count = true;
      break;
    }
    if (!got_count) break;  // clean end of file
    const int64_t frame = static_cast<int64_t>(frames.size());

    // ---- line 2: key=value properties ----
    if (!std::getline(in, line))
      detail::xyz_error(line_no + 1, frame, "missing properties line");
    ++line_no;

    bool has_energy = false, has_forces = false, has_descriptor = false;
    double energy = 0.0;
    for (const auto& tok : detail::split_ws(line)) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;  // ignore bare words
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "energy") {
        energy = detail::parse_f64_token(val, line_no, "energy");
        has_energy = true;
      } else if (key == "Properties") {
        has_descriptor = true;
        if (val == "species:S:1:pos:R:3") {
          has_forces = false;
        } else if (val == "species:S:1:pos:R:3:forces:R:3") {
          has_forces = true;
        } else {
          detail::xyz_error(line_no, frame, "unsupported Properties descriptor '" + val + "'");
        }
      }
      // unknown keys are ignored
    }
    if (!has_descriptor)
      detail::xyz_error(line_no, frame, "properties line lacks a Properties= descriptor");

    // ---- body: N atom rows ----
    MoleculeConf conf;
    conf.z.reserve(static_cast<size_t>(natoms));
    conf.coords.reserve(static_cast<size_t>(natoms) * 3);
    std::vector<double> forces;
    if (has_forces) forces.reserve(static_cast<size_t>(natoms) * 3);

    for (int64_t i = 0; i < natoms; ++i) {
      if (!std::getline(in, line))
        detail::xyz_error(line_no + 1, frame,
                          "file ends inside the atom block (expected " + std::to_string(natoms) +
                              " rows, found " + std::to_string(i) + ")");
      ++line_no;
      const auto toks = detail::split_ws(line);
      const size_t want = has_forces ? 7 : 4;
      if (toks.size() != want)
        detail::xyz_error(line_no, frame,
                          "atom row has " + std::to_string(toks.size()) + " fields, expected " +
                              std::to_string(want));
      int64_t z = 0;
      try {
        z = atomic_number(toks[0]);
      } catch (const std::exception& e) {
        detail::xyz_error(line_no, frame, e.what());
      }
      conf.z.push_back(z);
      for (int a = 0; a < 3; ++a)
        conf.coords.push_back(
            detail::parse_f64_token(toks[static_cast<size_t>(1 + a)], line_no, "coordinate"));
      if (has_forces)
        for (int a = 0; a < 3; ++a)
          forces.push_back(
              detail::parse_f64_token(toks[static_cast<size_t>(4 + a)], line_no, "force"));
    }

    if (has_energy) conf.energy = energy;
    if (has_forces) conf.forces = std::move(forces);
    try {
      conf.validate();
    } catch (const std::exception& e) {
      detail::xyz_error(line_no, frame, e.what());
    }
    frames.push_back(std::move(conf));
  }
  return frames;
}

// Writes frames in the same dialect load_extxyz reads. Energy and forces are
// emitted per frame when the conformation carries them.
inline void save_extxyz(const std::string& path, const std::vector<MoleculeConf>& frames) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  char buf[64];
  const auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& conf : frames) {
    const bool has_forces = !conf.forces.empty();
    out << conf.natoms() << "\n";
    if (conf.energy.has_value()) out << "energy=" << fmt(*conf.energy) << " ";
    out << "Properties=species:S:1:pos:R:3";
    if (has_forces) out << ":forces:R:3";
    out << "\n";
    for (int64_t i = 0; i < conf.natoms(); ++i) {
      out << element_symbol(conf.z[static_cast<size_t>(i)]);
      for (int a = 0; a < 3; ++a) out << " " << fmt(conf.coord(i, a));
      if (has_forces)
        for (int a = 0; a < 3; ++a)
          out << " " << fmt(conf.forces[static_cast<size_t>(i * 3 + a)]);
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failure on '" + path + "'");
}

}  // namespace gnnlf
