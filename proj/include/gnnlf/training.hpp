#pragma once
// Training: dataset splits, the energy/force loss, Adam, plateau scheduling,
// early stopping, and MAE evaluation.
//
// Energies are normalized per dataset (subtract the training-split mean,
// divide by its standard deviation) before optimization; the normalization
// constants ride along in the checkpoint so inference reports physical units.
// Force targets live in the same normalized scale (divide by std). The force
// branch of the loss differentiates the predicted forces themselves — the
// tape records its own backward pass, so one more backward yields parameter
// gradients of the combined objective.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace gnnlf {

enum class TargetKind { EnergyForces, ScalarProperty };

struct Dataset {
  std::vector<MoleculeConf> confs;
  TargetKind kind = TargetKind::EnergyForces;
  std::string units = "kcal/mol";
};

struct TrainConfig {
  double lr = 1e-3;
  int64_t batch_size = 16;
  int64_t max_epochs = 6000;
  int64_t patience = 500;    // early-stopping patience, epochs
  double rho = 0.95;         // force-loss weight in [0, 1]
  uint64_t seed = 0;
  int64_t workers = 1;       // kept for interface stability; execution is
                             // always in deterministic index order
  double sched_factor = 0.8;
  int64_t sched_patience = 30;  // evaluations without improvement before decay
  double min_lr = 1e-6;

  static TrainConfig defaults_for(TargetKind kind) {
    TrainConfig c;
    if (kind == TargetKind::ScalarProperty) {
      c.lr = 3e-4;
      c.batch_size = 64;
      c.max_epochs = 1000;
      c.patience = 50;
      c.rho = 0.0;
    }
    return c;
  }

  void validate() const {
    if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
    if (max_epochs < 1) throw std::invalid_argument("max epochs must be positive");
    if (patience < 1) throw std::invalid_argument("patience must be positive");
    if (!(rho >= 0.0 && rho <= 1.0))
      throw std::invalid_argument("force-loss weight must lie in [0, 1]");
    if (sched_patience < 1) throw std::invalid_argument("scheduler patience must be positive");
    if (!(sched_factor > 0.0 && sched_factor < 1.0))
      throw std::invalid_argument("scheduler factor must lie in (0, 1)");
  }
};

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitIndices {
  std::vector<size_t> train, val, test;
};

// Deterministic shuffle-based split; everything beyond train+val is test.
inline SplitIndices split_dataset(size_t n, size_t train_n, size_t val_n, uint64_t seed) {
  if (train_n + val_n > n)
    throw std::invalid_argument("split sizes exceed the dataset size");
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(train_n),
               order.begin() + static_cast<std::ptrdiff_t>(train_n + val_n));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_n + val_n), order.end());
  return s;
}

// ---------------------------------------------------------------------------
// Loss (physical-space reference implementation; train() applies the same
// formula in normalized space on the tape)
// ---------------------------------------------------------------------------

// (1-rho) * sum dE^2 / B  +  rho * sum dF^2 / (3 * total atoms)
inline double loss_pes(const std::vector<double>& pred_e, const std::vector<double>& target_e,
                       const std::vector<double>& pred_f, const std::vector<double>& target_f,
                       double rho) {
  if (target_e.empty()) throw std::invalid_argument("loss requires energy targets");
  if (pred_e.size() != target_e.size())
    throw std::invalid_argument("energy prediction/target size mismatch");
  if (pred_f.size() != target_f.size())
    throw std::invalid_argument("force prediction/target size mismatch");
  if (rho > 0.0 && target_f.empty())
    throw std::invalid_argument("force-weighted loss requires force targets");

  double se = 0.0;
  for (size_t i = 0; i < pred_e.size(); ++i) {
    const double d = pred_e[i] - target_e[i];
    se += d * d;
  }
  double sf = 0.0;
  for (size_t i = 0; i < pred_f.size(); ++i) {
    const double d = pred_f[i] - target_f[i];
    sf += d * d;
  }
  double loss = (1.0 - rho) * se / static_cast<double>(pred_e.size());
  if (!target_f.empty()) loss += rho * sf / static_cast<double>(target_f.size());
  return loss;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t t = 0;
};

// One bias-corrected Adam update over every trainable tensor. `grads` must be
// index-aligned with the parameter list; state is created lazily on first use.
inline void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
                      double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (grads.size() != params.count())
    throw std::invalid_argument("gradient list does not match the parameter list");
  if (state.m.empty()) {
    state.m.resize(params.count());
    state.v.resize(params.count());
    for (size_t i = 0; i < params.count(); ++i) {
      state.m[i].assign(params.tensor(i).data.size(), 0.0);
      state.v[i].assign(params.tensor(i).data.size(), 0.0);
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.count(); ++i) {
    Tensor& x = params.tensor(i);
    if (!x.requires_grad) continue;
    const Tensor& g = grads[i];
    if (g.data.size() != x.data.size())
      throw std::invalid_argument("gradient shape mismatch for parameter '" + params.name(i) +
                                  "'");
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (size_t k = 0; k < x.data.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * g.data[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * g.data[k] * g.data[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      x.data[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Plateau scheduler
// ---------------------------------------------------------------------------

struct PlateauScheduler {
  double lr;
  double factor = 0.8;
  int64_t patience = 30;
  double min_lr = 1e-6;

  double best = std::numeric_limits<double>::infinity();
  int64_t bad = 0;

  // Feed one validation metric; returns the learning rate for the next step.
  double step(double metric) {
    if (metric < best) {
      best = metric;
      bad = 0;
    } else if (++bad > patience) {
      lr = std::max(lr * factor, min_lr);
      bad = 0;
    }
    return lr;
  }
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalResult {
  double mae_energy = 0.0;
  std::optional<double> mae_forces;  // absent when any conf lacks force targets
  double ms_per_molecule = 0.0;
  size_t n_molecules = 0;
};

// Physical-unit MAE: energy averaged per molecule, forces per component.
inline EvalResult evaluate_mae(const ModelParams& params, const ModelConfig& cfg,
                               const std::vector<MoleculeConf>& confs) {
  if (confs.empty()) throw std::invalid_argument("evaluation set is empty");
  bool all_forces = true;
  for (const auto& c : confs) {
    if (!c.energy.has_value())
      throw std::invalid_argument("evaluation requires energy targets on every conformation");
    if (c.forces.empty()) all_forces = false;
  }

  double abs_e = 0.0, abs_f = 0.0;
  size_t n_f = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& c : confs) {
    if (all_forces) {
      const auto ef = predict_energy_forces(c, params, cfg);
      abs_e += std::abs(ef.energy - *c.energy);
      for (size_t k = 0; k < ef.forces.size(); ++k) abs_f += std::abs(ef.forces[k] - c.forces[k]);
      n_f += ef.forces.size();
    } else {
      abs_e += std::abs(predict_energy(c, params, cfg) - *c.energy);
    }
  }
  const auto t1 = std::chrono::steady_clock::now();

  EvalResult r;
  r.n_molecules = confs.size();
  r.mae_energy = abs_e / static_cast<double>(confs.size());
  if (all_forces && n_f > 0) r.mae_forces = abs_f / static_cast<double>(n_f);
  r.ms_per_molecule = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                      static_cast<double>(confs.size());
  return r;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochRow {
  int64_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_mae_e = 0.0;
  double val_mae_f = 0.0;  // 0 when the validation set has no force targets
  double val_metric = 0.0;
  double lr = 0.0;  // rate used during this epoch
};

struct TrainResult {
  ModelParams best_params;
  std::vector<EpochRow> history;
  int64_t best_epoch = 0;
  double best_metric = std::numeric_limits<double>::infinity();
  bool aborted_nonfinite = false;
};

namespace detail {

// Loss of one minibatch in normalized space, recorded on the tape.
// Returns the scalar Var; force residuals are skipped when rho == 0 or the
// batch carries no force targets.
inline Var batch_loss(Tape& t, const Batch& batch, const TapedModel& m,
                      const std::vector<const MoleculeConf*>& mols, double rho, double mean,
                      double stdev, bool use_forces) {
  const int64_t nb = static_cast<int64_t>(mols.size());
  Tensor te(nb, 1);
  for (int64_t i = 0; i < nb; ++i)
    te.data[static_cast<size_t>(i)] = (*mols[static_cast<size_t>(i)]->energy - mean) / stdev;
  const Var ediff = m.energy_norm - t.constant(te);
  Var loss = sum_all(ediff * ediff) * ((1.0 - rho) / static_cast<double>(nb));

  if (use_forces && rho > 0.0) {
    Tensor tf(batch.natoms(), 3);
    size_t at = 0;
    for (const auto* mol : mols)
      for (const double f : mol->forces) tf.data[at++] = f / stdev;
    // predicted normalized forces: minus the recorded coordinate gradient
    auto g = t.backward(sum_all(m.energy_norm));
    const Var fpred = -g.of(m.coords);
    const Var fdiff = fpred - t.constant(tf);
    loss = loss +
           sum_all(fdiff * fdiff) * (rho / (3.0 * static_cast<double>(batch.natoms())));
  }
  return loss;
}

}  // namespace detail

// Full training loop: minibatch Adam with per-epoch validation, plateau
// scheduling, and early stopping on the validation metric (energy MAE plus
// force MAE when available). Deterministic for a fixed seed.
inline TrainResult train(const ModelParams& initial, const ModelConfig& mcfg,
                         const std::vector<MoleculeConf>& train_set,
                         const std::vector<MoleculeConf>& val_set, const TrainConfig& tcfg,
                         TargetKind kind = TargetKind::EnergyForces) {
  tcfg.validate();
  if (train_set.empty()) throw std::invalid_argument("training split is empty");
  if (val_set.empty()) throw std::invalid_argument("validation split is empty");
  const bool use_forces = kind == TargetKind::EnergyForces && tcfg.rho > 0.0;
  for (const auto& c : train_set) {
    if (!c.energy.has_value())
      throw std::invalid_argument("training requires an energy target on every conformation");
    if (use_forces && c.forces.empty())
      throw std::invalid_argument("force-weighted training requires force targets");
  }

  // normalization constants from the training split
  double mean = 0.0;
  for (const auto& c : train_set) mean += *c.energy;
  mean /= static_cast<double>(train_set.size());
  double var = 0.0;
  for (const auto& c : train_set) {
    const double d = *c.energy - mean;
    var += d * d;
  }
  const double stdev = std::max(std::sqrt(var / static_cast<double>(train_set.size())), 1e-8);

  ModelParams params = initial;
  params.set_energy_norm(mean, stdev);

  TrainResult out;
  out.best_params = params;
  AdamState adam;
  PlateauScheduler sched{tcfg.lr, tcfg.sched_factor, tcfg.sched_patience, tcfg.min_lr};
  std::mt19937_64 rng(tcfg.seed);
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  double lr = tcfg.lr;
  int64_t bad_epochs = 0;

  for (int64_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    bool finite = true;
    for (size_t start = 0; finite && start < order.size();
         start += static_cast<size_t>(tcfg.batch_size)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(tcfg.batch_size));
      std::vector<const MoleculeConf*> mols;
      for (size_t k = start; k < stop; ++k) mols.push_back(&train_set[order[k]]);

      Tape t;
      const Batch batch = Batch::make(mols, mcfg.cutoff);
      ForwardOptions opt;
      opt.coords_grad = use_forces;
      opt.params_grad = true;
      const auto m = model_forward(t, batch, params, mcfg, opt);
      for (const double v : m.energy_norm.values())
        if (!std::isfinite(v)) finite = false;
      if (!finite) break;
      const Var loss = detail::batch_loss(t, batch, m, mols, use_forces ? tcfg.rho : 0.0, mean,
                                          stdev, use_forces);
      if (!std::isfinite(loss.values()[0])) {
        finite = false;
        break;
      }
      loss_sum += loss.values()[0] * static_cast<double>(mols.size());

      auto grads = t.backward(loss);
      std::vector<Tensor> glist;
      glist.reserve(params.count());
      for (size_t i = 0; i < params.count(); ++i) {
        if (params.tensor(i).requires_grad && grads.has(m.leaves[i]))
          glist.push_back(grads.tensor_of(m.leaves[i]));
        else
          glist.push_back(Tensor(params.tensor(i).rows, params.tensor(i).cols));
      }
      adam_step(params, glist, adam, lr);
    }
    const double train_loss = loss_sum / static_cast<double>(train_set.size());
    if (!finite || !std::isfinite(train_loss)) {
      out.aborted_nonfinite = true;
      break;
    }

    EvalResult ev;
    try {
      ev = evaluate_mae(params, mcfg, val_set);
    } catch (const std::exception&) {
      out.aborted_nonfinite = true;
      break;
    }
    const double val_metric = ev.mae_energy + ev.mae_forces.value_or(0.0);
    if (!std::isfinite(val_metric)) {
      out.aborted_nonfinite = true;
      break;
    }

    out.history.push_back(
        {epoch, train_loss, ev.mae_energy, ev.mae_forces.value_or(0.0), val_metric, lr});

    if (val_metric < out.best_metric) {
      out.best_metric = val_metric;
      out.best_epoch = epoch;
      out.best_params = params;
      bad_epochs = 0;
    } else if (++bad_epochs >= tcfg.patience) {
      break;
    }
    lr = sched.step(val_metric);
  }
  return out;
}

}  // namespace gnnlf
