#pragma once
// The interaction model: invariant scalar channels driven by local-frame
// projections.
//
// Pipeline per forward pass:
//   edge featurization -> species embedding with cutoff-weighted distance
//   messages -> per-atom frames from the embedding scalars -> projection
//   features d1/d2/d3 -> per-layer (or shared) filters -> L residual message
//   passing layers -> per-atom readout summed per molecule.
//
// Atom coordinates enter only through distances, cutoff envelopes and frame
// projections, so every scalar in the network is invariant under rigid
// motions while frames remain equivariant; forces are exact negative
// coordinate gradients obtained from the tape.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "frames.hpp"
#include "geometry.hpp"
#include "tensor.hpp"

namespace gnnlf {

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------
struct ModelConfig {
  int64_t hidden = 128;  // F: scalar channels = frame vectors per atom
  int64_t rbf = 32;      // K: radial basis size
  int64_t layers = 4;    // L: message passing layers
  double cutoff = 5.0;   // Angstrom, must lie in [4, 12]
  bool use_d2 = false;   // neighbor-frame projection channel (off by default)
  bool use_d3 = true;    // frame-on-frame transport channel
  bool share_filters = true;
  bool schnet_mode = false;        // distance-only filters, no frames at all
  bool global_frame_mode = false;  // one summed frame shared by all atoms
  bool species_shift = true;       // per-species energy offset

  void validate() const {
    if (hidden < 1 || rbf < 1 || layers < 1)
      throw std::invalid_argument("hidden, rbf and layers must all be >= 1");
    if (cutoff < 4.0 || cutoff > 12.0)
      throw std::invalid_argument("cutoff must lie in [4, 12] Angstrom, got " +
                                  std::to_string(cutoff));
  }

  // number of projection channels feeding g2
  int64_t channels() const {
    return schnet_mode ? 0 : 1 + (use_d2 ? 1 : 0) + (use_d3 ? 1 : 0);
  }
  int64_t filter_sets() const { return share_filters ? 1 : layers; }
};

// ---------------------------------------------------------------------------
// Parameters: an ordered collection of named tensors plus the species table.
// ---------------------------------------------------------------------------
class ModelParams {
 public:
  void add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    index_[name] = tensors_.size();
    tensors_.emplace_back(name, std::move(t));
  }
  Tensor& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return tensors_[it->second].second;
  }
  const Tensor& at(const std::string& name) const {
    return const_cast<ModelParams*>(this)->at(name);
  }
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  size_t count() const { return tensors_.size(); }
  const std::string& name(size_t i) const { return tensors_[i].first; }
  Tensor& tensor(size_t i) { return tensors_[i].second; }
  const Tensor& tensor(size_t i) const { return tensors_[i].second; }

  const std::vector<int64_t>& species() const { return species_; }
  void set_species(std::vector<int64_t> species) { species_ = std::move(species); }
  int64_t species_index(int64_t z) const {
    for (size_t i = 0; i < species_.size(); ++i)
      if (species_[i] == z) return static_cast<int64_t>(i);
    throw std::invalid_argument("species Z=" + std::to_string(z) +
                                " is not in the model's species set");
  }

  double energy_mean() const { return at("norm.mean").data[0]; }
  double energy_std() const { return at("norm.std").data[0]; }
  void set_energy_norm(double mean, double std) {
    at("norm.mean").data[0] = mean;
    if (std <= 0.0) throw std::invalid_argument("energy std must be positive");
    at("norm.std").data[0] = std;
  }

  static ModelParams init(const ModelConfig& cfg, std::vector<int64_t> species, uint64_t seed);

 private:
  std::vector<std::pair<std::string, Tensor>> tensors_;
  std::map<std::string, size_t> index_;
  std::vector<int64_t> species_;
};

inline ModelParams ModelParams::init(const ModelConfig& cfg, std::vector<int64_t> species,
                                     uint64_t seed) {
  cfg.validate();
  std::sort(species.begin(), species.end());
  species.erase(std::unique(species.begin(), species.end()), species.end());
  if (species.empty()) throw std::invalid_argument("species set is empty");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto dense = [&](int64_t rows, int64_t cols) {
    Tensor t(rows, cols);
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& v : t.data) v = u(rng);
    t.requires_grad = true;
    return t;
  };
  auto gaussian = [&](int64_t rows, int64_t cols) {
    Tensor t(rows, cols);
    for (auto& v : t.data) v = normal(rng);
    t.requires_grad = true;
    return t;
  };
  auto zeros = [&](int64_t rows, int64_t cols) {
    Tensor t(rows, cols);
    t.requires_grad = true;
    return t;
  };

  const int64_t S = static_cast<int64_t>(species.size());
  const int64_t F = cfg.hidden, K = cfg.rbf;

  ModelParams p;
  p.set_species(std::move(species));
  p.add("emb1", gaussian(S, F));
  p.add("emb2", gaussian(S, F));
  p.add("embed_filter.w", dense(K, F));
  p.add("embed_filter.b", zeros(1, F));
  {
    auto init = rbf_init(K, cfg.cutoff);
    init.beta.requires_grad = true;
    init.mu.requires_grad = true;
    p.add("rbf.beta", std::move(init.beta));
    p.add("rbf.mu", std::move(init.mu));
  }
  if (!cfg.schnet_mode) {
    p.add("frame_filter.w", dense(K, F));
    p.add("frame_filter.b", zeros(1, F));
    if (cfg.use_d3) {
      p.add("proj.W1", dense(F, F));
      p.add("proj.W2", dense(F, F));
    }
  }
  const int64_t D = F * cfg.channels();
  for (int64_t s = 0; s < cfg.filter_sets(); ++s) {
    const std::string base = "filters." + std::to_string(s) + ".";
    p.add(base + "g1_w", dense(K, F));
    p.add(base + "g1_b", zeros(1, F));
    if (!cfg.schnet_mode) {
      p.add(base + "g2_w1", dense(D, F));
      p.add(base + "g2_b1", zeros(1, F));
      p.add(base + "g2_w2", dense(F, F));
      p.add(base + "g2_b2", zeros(1, F));
    }
  }
  for (int64_t l = 0; l < cfg.layers; ++l) {
    const std::string base = "layer." + std::to_string(l) + ".";
    p.add(base + "w1", dense(F, F));
    p.add(base + "b1", zeros(1, F));
    p.add(base + "w2", dense(F, F));
    p.add(base + "b2", zeros(1, F));
  }
  p.add("head.w", dense(F, 1));
  p.add("head.b", zeros(1, 1));
  if (cfg.species_shift) p.add("shift", zeros(S, 1));
  p.add("dipole.w", dense(F, 1));
  p.add("dipole.b", zeros(1, 1));
  p.add("r2.w", dense(F, 1));
  p.add("r2.b", zeros(1, 1));
  {
    Tensor mean = Tensor::scalar(0.0), std = Tensor::scalar(1.0);
    p.add("norm.mean", std::move(mean));  // not trainable
    p.add("norm.std", std::move(std));
  }
  return p;
}

inline int64_t parameter_count(const ModelParams& p) {
  int64_t n = 0;
  for (size_t i = 0; i < p.count(); ++i)
    if (p.tensor(i).requires_grad) n += p.tensor(i).size();
  return n;
}

inline int64_t filter_parameter_count(const ModelParams& p) {
  int64_t n = 0;
  for (size_t i = 0; i < p.count(); ++i)
    if (p.name(i).rfind("filters.", 0) == 0) n += p.tensor(i).size();
  return n;
}

// Expand a filter-sharing model into its per-layer variant: every layer's
// filter set is a copy of the shared one, so outputs must match bit for bit.
inline ModelParams clone_with_unshared_filters(const ModelParams& shared, const ModelConfig& cfg) {
  if (!cfg.share_filters) throw std::invalid_argument("source model must share filters");
  ModelConfig unshared_cfg = cfg;
  unshared_cfg.share_filters = false;
  ModelParams out = ModelParams::init(unshared_cfg, shared.species(), 0);
  for (size_t i = 0; i < out.count(); ++i) {
    const std::string& name = out.name(i);
    if (name.rfind("filters.", 0) == 0) {
      const size_t second_dot = name.find('.', 8);
      out.tensor(i).data = shared.at("filters.0" + name.substr(second_dot)).data;
    } else {
      out.tensor(i).data = shared.at(name).data;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batches: molecules concatenated with per-atom segment ids; edges never
// cross molecules.
// ---------------------------------------------------------------------------
struct Batch {
  std::vector<int64_t> z;
  std::vector<double> coords;
  std::shared_ptr<const std::vector<int64_t>> mol_id;  // per atom
  int64_t nmol = 0;
  std::vector<int64_t> atom_count;  // per molecule
  NeighborGraph graph;              // merged

  int64_t natoms() const { return static_cast<int64_t>(z.size()); }

  static Batch make(const std::vector<const MoleculeConf*>& mols, double r_cut) {
    if (mols.empty()) throw std::invalid_argument("batch must contain at least one molecule");
    Batch b;
    b.nmol = static_cast<int64_t>(mols.size());
    auto src = std::make_shared<std::vector<int64_t>>();
    auto dst = std::make_shared<std::vector<int64_t>>();
    auto mol_id = std::make_shared<std::vector<int64_t>>();
    b.graph.r_cut = r_cut;
    int64_t offset = 0;
    for (int64_t m = 0; m < b.nmol; ++m) {
      const MoleculeConf& conf = *mols[static_cast<size_t>(m)];
      const NeighborGraph g = build_neighbor_graph(conf, r_cut);
      b.z.insert(b.z.end(), conf.z.begin(), conf.z.end());
      b.coords.insert(b.coords.end(), conf.coords.begin(), conf.coords.end());
      b.atom_count.push_back(conf.natoms());
      for (int64_t i = 0; i < conf.natoms(); ++i) mol_id->push_back(m);
      for (int64_t e = 0; e < g.nedges(); ++e) {
        src->push_back((*g.src)[static_cast<size_t>(e)] + offset);
        dst->push_back((*g.dst)[static_cast<size_t>(e)] + offset);
      }
      b.graph.dist.insert(b.graph.dist.end(), g.dist.begin(), g.dist.end());
      b.graph.unit.insert(b.graph.unit.end(), g.unit.begin(), g.unit.end());
      b.graph.weight.insert(b.graph.weight.end(), g.weight.begin(), g.weight.end());
      offset += conf.natoms();
    }
    b.graph.natoms = offset;
    b.graph.src = std::move(src);
    b.graph.dst = std::move(dst);
    b.mol_id = std::move(mol_id);
    return b;
  }
  static Batch make(const MoleculeConf& conf, double r_cut) { return make({&conf}, r_cut); }
};

// ---------------------------------------------------------------------------
// Forward pass.
// ---------------------------------------------------------------------------
struct ForwardOptions {
  bool coords_grad = false;
  bool params_grad = false;
  bool want_dipole = false;
  bool want_r2 = false;
};

struct TapedModel {
  std::vector<Var> leaves;  // one per parameter tensor, in parameter order
  Var coords;
  EdgeGeometry eg;
  Var s0;           // (N,F) embedding scalars
  Var s;            // (N,F) final scalars
  FrameSet frames;  // invalid Vars in distance-only mode
  Var d1, d2, d3;   // (E,F) where enabled
  Var energy_norm;  // (B,1) normalized units
  Var energy;       // (B,1) physical units
  Var dipole;       // (B,1) if requested
  Var r2;           // (B,1) if requested
};

inline TapedModel model_forward(Tape& t, const Batch& batch, const ModelParams& params,
                                const ModelConfig& cfg, const ForwardOptions& opt = {}) {
  cfg.validate();
  if (batch.graph.r_cut != cfg.cutoff)
    throw std::invalid_argument("batch was built with a different cutoff than the model");

  TapedModel m;

  // species index per atom, then parameter leaves
  auto zidx = std::make_shared<std::vector<int64_t>>();
  zidx->reserve(static_cast<size_t>(batch.natoms()));
  for (int64_t zi : batch.z) zidx->push_back(params.species_index(zi));

  std::map<std::string, Var> leaf;
  for (size_t i = 0; i < params.count(); ++i) {
    Tensor tens = params.tensor(i);
    tens.requires_grad = tens.requires_grad && opt.params_grad;
    Var v = t.leaf(tens);
    m.leaves.push_back(v);
    leaf[params.name(i)] = v;
  }

  Tensor coords(batch.natoms(), 3, batch.coords);
  coords.requires_grad = opt.coords_grad;
  m.coords = t.leaf(coords);

  const NeighborGraph& g = batch.graph;
  const int64_t N = batch.natoms(), B = batch.nmol;
  m.eg = edge_geometry(t, m.coords, g);
  Var rbf = rbf_expand(t, m.eg.dist, leaf["rbf.beta"], leaf["rbf.mu"]);

  // -- embedding block ------------------------------------------------------
  Var emb1_atoms = t.gather_rows(leaf["emb1"], zidx);
  Var emb2_atoms = t.gather_rows(leaf["emb2"], zidx);
  Var embed_messages = m.eg.weight * (linear(rbf, leaf["embed_filter.w"], leaf["embed_filter.b"]) *
                                      t.gather_rows(emb2_atoms, g.dst));
  m.s0 = emb1_atoms + t.segment_sum(embed_messages, g.src, N);

  // -- frames and projections -----------------------------------------------
  Var proj;
  if (!cfg.schnet_mode) {
    Var frame_filt = linear(rbf, leaf["frame_filter.w"], leaf["frame_filter.b"]);
    m.frames = generate_frames(t, g, m.s0, frame_filt, m.eg.weight, m.eg.unit);
    if (cfg.global_frame_mode) m.frames = global_frame(t, m.frames);
    m.d1 = project_d1(t, g, m.frames, m.eg.unit);
    proj = m.d1;
    if (cfg.use_d2) {
      m.d2 = project_d2(t, g, m.frames, m.eg.unit);
      proj = t.concat_cols(proj, m.d2);
    }
    if (cfg.use_d3) {
      m.d3 = project_d3(t, g, m.frames, leaf["proj.W1"], leaf["proj.W2"]);
      proj = t.concat_cols(proj, m.d3);
    }
  }

  // -- filters ----------------------------------------------------------------
  std::vector<Var> filters;
  for (int64_t s = 0; s < cfg.filter_sets(); ++s) {
    const std::string base = "filters." + std::to_string(s) + ".";
    Var f = linear(rbf, leaf[base + "g1_w"], leaf[base + "g1_b"]);
    if (!cfg.schnet_mode) {
      Var h = silu(linear(proj, leaf[base + "g2_w1"], leaf[base + "g2_b1"]));
      f = f * linear(h, leaf[base + "g2_w2"], leaf[base + "g2_b2"]);
    }
    filters.push_back(f);
  }

  // -- message passing --------------------------------------------------------
  m.s = m.s0;
  for (int64_t l = 0; l < cfg.layers; ++l) {
    const std::string base = "layer." + std::to_string(l) + ".";
    Var f = filters[static_cast<size_t>(cfg.share_filters ? 0 : l)];
    Var messages = m.eg.weight * (f * t.gather_rows(m.s, g.dst));
    Var agg = t.segment_sum(messages, g.src, N);
    Var upd = linear(silu(linear(agg, leaf[base + "w1"], leaf[base + "b1"])),
                     leaf[base + "w2"], leaf[base + "b2"]);
    m.s = m.s + upd;
  }

  // -- energy head --------------------------------------------------------------
  Var per_atom = linear(m.s, leaf["head.w"], leaf["head.b"]);
  if (cfg.species_shift) per_atom = per_atom + t.gather_rows(leaf["shift"], zidx);
  m.energy_norm = t.segment_sum(per_atom, batch.mol_id, B);
  m.energy = m.energy_norm * leaf["norm.std"] + leaf["norm.mean"];

  // -- property heads -------------------------------------------------------
  if (opt.want_dipole) {
    Var q = linear(m.s, leaf["dipole.w"], leaf["dipole.b"]);  // (N,1)
    Tensor counts(B, 1);
    for (int64_t b = 0; b < B; ++b)
      counts.data[static_cast<size_t>(b)] = static_cast<double>(batch.atom_count[static_cast<size_t>(b)]);
    Var qmean = t.gather_rows(t.segment_sum(q, batch.mol_id, B) / t.constant(counts), batch.mol_id);
    Var mu_vec = t.segment_sum((q - qmean) * m.coords, batch.mol_id, B);  // (B,3)
    m.dipole = sqrt(sum_cols(mu_vec * mu_vec) + 1e-30);
  }
  if (opt.want_r2) {
    Tensor mass(N, 1);
    for (int64_t i = 0; i < N; ++i)
      mass.data[static_cast<size_t>(i)] = atomic_mass(batch.z[static_cast<size_t>(i)]);
    Var mv = t.constant(mass);
    Var msum = t.segment_sum(mv, batch.mol_id, B);                      // (B,1)
    Var com = t.segment_sum(mv * m.coords, batch.mol_id, B) / msum;     // (B,3)
    Var disp = m.coords - t.gather_rows(com, batch.mol_id);             // (N,3)
    Var rr = sum_cols(disp * disp);                                     // (N,1)
    Var x = linear(m.s, leaf["r2.w"], leaf["r2.b"]);                    // (N,1)
    Var val = t.segment_sum(x * rr, batch.mol_id, B);                   // (B,1)
    m.r2 = sqrt(val * val + 1e-30);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Plain-number prediction entry points (physical units).
// ---------------------------------------------------------------------------
inline double predict_energy(const MoleculeConf& conf, const ModelParams& params,
                             const ModelConfig& cfg) {
  Tape t;
  const Batch b = Batch::make(conf, cfg.cutoff);
  const TapedModel m = model_forward(t, b, params, cfg);
  return m.energy.values()[0];
}

struct EnergyForces {
  double energy = 0.0;
  std::vector<double> forces;  // N x 3
};

inline EnergyForces predict_energy_forces(const MoleculeConf& conf, const ModelParams& params,
                                          const ModelConfig& cfg) {
  Tape t;
  const Batch b = Batch::make(conf, cfg.cutoff);
  ForwardOptions opt;
  opt.coords_grad = true;
  const TapedModel m = model_forward(t, b, params, cfg, opt);
  auto grads = t.backward(sum_all(m.energy));
  const Tensor g = grads.tensor_of(m.coords);
  EnergyForces out;
  out.energy = m.energy.values()[0];
  out.forces.resize(g.data.size());
  for (size_t i = 0; i < g.data.size(); ++i) {
    if (!std::isfinite(g.data[i])) throw std::runtime_error("non-finite gradient in force evaluation");
    out.forces[i] = -g.data[i];
  }
  return out;
}

inline double predict_dipole(const MoleculeConf& conf, const ModelParams& params,
                             const ModelConfig& cfg) {
  Tape t;
  const Batch b = Batch::make(conf, cfg.cutoff);
  ForwardOptions opt;
  opt.want_dipole = true;
  return model_forward(t, b, params, cfg, opt).dipole.values()[0];
}

inline double predict_r2(const MoleculeConf& conf, const ModelParams& params,
                         const ModelConfig& cfg) {
  Tape t;
  const Batch b = Batch::make(conf, cfg.cutoff);
  ForwardOptions opt;
  opt.want_r2 = true;
  return model_forward(t, b, params, cfg, opt).r2.values()[0];
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------
inline void save_model(const std::string& path, const ModelParams& params, const ModelConfig& cfg) {
  Checkpoint ck;
  ck.meta["format"] = "model";
  ck.meta["hidden"] = std::to_string(cfg.hidden);
  ck.meta["rbf"] = std::to_string(cfg.rbf);
  ck.meta["layers"] = std::to_string(cfg.layers);
  ck.meta["cutoff"] = hexfloat(cfg.cutoff);
  ck.meta["use_d2"] = cfg.use_d2 ? "1" : "0";
  ck.meta["use_d3"] = cfg.use_d3 ? "1" : "0";
  ck.meta["share_filters"] = cfg.share_filters ? "1" : "0";
  ck.meta["schnet_mode"] = cfg.schnet_mode ? "1" : "0";
  ck.meta["global_frame_mode"] = cfg.global_frame_mode ? "1" : "0";
  ck.meta["species_shift"] = cfg.species_shift ? "1" : "0";
  std::string species;
  for (int64_t z : params.species()) species += (species.empty() ? "" : " ") + std::to_string(z);
  ck.meta["species"] = species;
  for (size_t i = 0; i < params.count(); ++i) ck.tensors.emplace_back(params.name(i), params.tensor(i));
  save_checkpoint(path, ck);
}

inline std::pair<ModelParams, ModelConfig> load_model(const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.meta.count("format") == 0 || ck.meta_at("format") != "model")
    throw std::runtime_error("'" + path + "' is not a model checkpoint");
  ModelConfig cfg;
  cfg.hidden = std::stoll(ck.meta_at("hidden"));
  cfg.rbf = std::stoll(ck.meta_at("rbf"));
  cfg.layers = std::stoll(ck.meta_at("layers"));
  cfg.cutoff = std::strtod(ck.meta_at("cutoff").c_str(), nullptr);
  cfg.use_d2 = ck.meta_at("use_d2") == "1";
  cfg.use_d3 = ck.meta_at("use_d3") == "1";
  cfg.share_filters = ck.meta_at("share_filters") == "1";
  cfg.schnet_mode = ck.meta_at("schnet_mode") == "1";
  cfg.global_frame_mode = ck.meta_at("global_frame_mode") == "1";
  cfg.species_shift = ck.meta_at("species_shift") == "1";

  std::vector<int64_t> species;
  {
    std::istringstream ss(ck.meta_at("species"));
    int64_t z;
    while (ss >> z) species.push_back(z);
  }
  ModelParams params = ModelParams::init(cfg, species, 0);
  for (size_t i = 0; i < params.count(); ++i) {
    const Tensor& stored = ck.tensor(params.name(i));
    if (stored.rows != params.tensor(i).rows || stored.cols != params.tensor(i).cols)
      throw std::runtime_error("checkpoint tensor '" + params.name(i) + "' has unexpected shape");
    params.tensor(i).data = stored.data;
  }
  return {std::move(params), cfg};
}

}  // namespace gnnlf
