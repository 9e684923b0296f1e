#pragma once
// Versioned text container for named tensors plus string metadata.  Values are
// written as C hexadecimal floating point literals, so a save/load round trip
// reproduces every double bit for bit.
//
//   gnnlf-checkpoint v1
//   meta <key> <value...>
//   tensor <name> <rows> <cols>
//   <cols hexfloats per line, rows lines>
//   end

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace gnnlf {

struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;  // insertion-ordered
  std::map<std::string, std::string> meta;

  const Tensor& tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw std::out_of_range("checkpoint has no tensor named '" + name + "'");
  }
  bool has_tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return true;
    return false;
  }
  const std::string& meta_at(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw std::out_of_range("checkpoint has no meta key '" + key + "'");
    return it->second;
  }
};

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "gnnlf-checkpoint v1\n";
  for (const auto& [k, v] : ck.meta) {
    if (k.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("meta key '" + k + "' contains whitespace");
    if (v.find('\n') != std::string::npos)
      throw std::invalid_argument("meta value for '" + k + "' contains a newline");
    out << "meta " << k << " " << v << "\n";
  }
  for (const auto& [name, t] : ck.tensors) {
    if (name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("tensor name '" + name + "' contains whitespace");
    out << "tensor " << name << " " << t.rows << " " << t.cols << "\n";
    for (int64_t i = 0; i < t.rows; ++i) {
      for (int64_t j = 0; j < t.cols; ++j) {
        if (j) out << ' ';
        out << hexfloat(t.at(i, j));
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  int64_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("checkpoint parse error in '" + path + "' at line " +
                             std::to_string(lineno) + ": " + why);
  };
  if (!std::getline(in, line)) fail("empty file");
  ++lineno;
  if (line != "gnnlf-checkpoint v1") fail("unrecognized header '" + line + "'");

  Checkpoint ck;
  bool ended = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "end") {
      ended = true;
      break;
    } else if (tag == "meta") {
      std::string key;
      ss >> key;
      if (key.empty()) fail("meta line without key");
      std::string value;
      std::getline(ss, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (tag == "tensor") {
      std::string name;
      int64_t rows = -1, cols = -1;
      ss >> name >> rows >> cols;
      if (name.empty() || rows < 0 || cols < 0) fail("malformed tensor header");
      Tensor t(rows, cols);
      for (int64_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) fail("unexpected end of file inside tensor '" + name + "'");
        ++lineno;
        const char* p = line.c_str();
        char* next = nullptr;
        for (int64_t j = 0; j < cols; ++j) {
          const double v = std::strtod(p, &next);
          if (next == p) fail("expected " + std::to_string(cols) + " values for tensor '" + name + "'");
          t.at(i, j) = v;
          p = next;
        }
      }
      ck.tensors.emplace_back(name, std::move(t));
    } else {
      fail("unrecognized tag '" + tag + "'");
    }
  }
  if (!ended) fail("missing 'end' marker (file truncated?)");
  return ck;
}

}  // namespace gnnlf
