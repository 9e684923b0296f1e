// Command-line front end: train, eval, predict and verify.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 verification failure.
//
// Configuration precedence: command-line flag > config file > built-in
// default. The config file is a flat key-value format with [section]
// headers; `gnnlf --dump-config` prints every key with its built-in default.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gnnlf/extxyz.hpp"
#include "gnnlf/training.hpp"
#include "gnnlf/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised during option/config resolution: always maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Options: union of model config, training config and I/O paths.
// Fields start at the built-in defaults printed by --dump-config.
// ---------------------------------------------------------------------------
struct Opts {
  // [model]
  int64_t hidden = 128;
  int64_t rbf = 32;
  int64_t layers = 4;
  double cutoff = 5.0;
  bool use_d2 = false;
  bool use_d3 = true;
  bool share_filters = true;
  bool schnet_mode = false;
  bool global_frame = false;
  bool species_shift = true;

  // [train]
  double lr = 1e-3;
  int64_t batch_size = 16;
  int64_t max_epochs = 6000;
  int64_t patience = 500;
  double rho = 0.95;
  uint64_t seed = 0;
  int64_t workers = 1;
  double sched_factor = 0.8;
  int64_t sched_patience = 30;
  double min_lr = 1e-6;
  double val_frac = 0.1;

  // [io]
  std::string data;
  std::string val_data;
  std::string checkpoint;
  std::string out_dir = ".";
  std::string output;
  std::string report;

  // set during resolution, not a config key
  bool rho_explicit = false;

  gnnlf::ModelConfig model_config() const {
    gnnlf::ModelConfig m;
    m.hidden = hidden;
    m.rbf = rbf;
    m.layers = layers;
    m.cutoff = cutoff;
    m.use_d2 = use_d2;
    m.use_d3 = use_d3;
    m.share_filters = share_filters;
    m.schnet_mode = schnet_mode;
    m.global_frame_mode = global_frame;
    m.species_shift = species_shift;
    return m;
  }

  gnnlf::TrainConfig train_config() const {
    gnnlf::TrainConfig t;
    t.lr = lr;
    t.batch_size = batch_size;
    t.max_epochs = max_epochs;
    t.patience = patience;
    t.rho = rho;
    t.seed = seed;
    t.workers = workers;
    t.sched_factor = sched_factor;
    t.sched_patience = sched_patience;
    t.min_lr = min_lr;
    return t;
  }
};

// ---------------------------------------------------------------------------
// Config file: '# comment', '[section]', 'key = value'. Keys are qualified
// as "section.key"; a key before any section header is an error.
// ---------------------------------------------------------------------------
std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line, section;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3)
        throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed section header '" +
                          s + "'");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value', got '" +
                        s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    if (section.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": key '" + key +
                        "' appears before any [section] header");
    entries.emplace_back(section + "." + key, value);
  }
  return entries;
}

int64_t to_i64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end == v.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  return static_cast<int64_t>(x);
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end == v.c_str() || *end != '\0' || v[0] == '-')
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v +
                      "'");
  return static_cast<uint64_t>(x);
}

double to_f64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end == v.c_str() || *end != '\0')
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string s;
  for (char c : v) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

// One table drives config-file application, --dump-config output and the
// flag-vs-file precedence check (a key is skipped when its flag was given).
struct KeyBinding {
  std::string key;        // "section.name"
  std::string flag;       // CLI11 single-name form, e.g. "--hidden"
  std::function<void(Opts&, const std::string&)> apply;
  std::function<std::string(const Opts&)> show;
};

std::vector<KeyBinding> key_bindings() {
  std::vector<KeyBinding> b;
  auto add_i64 = [&b](const std::string& key, const std::string& flag, int64_t Opts::* field) {
    b.push_back({key, flag,
                 [key, field](Opts& o, const std::string& v) { o.*field = to_i64(key, v); },
                 [field](const Opts& o) { return std::to_string(o.*field); }});
  };
  auto add_f64 = [&b](const std::string& key, const std::string& flag, double Opts::* field) {
    b.push_back({key, flag,
                 [key, field](Opts& o, const std::string& v) { o.*field = to_f64(key, v); },
                 [field](const Opts& o) {
                   char buf[40];
                   std::snprintf(buf, sizeof buf, "%g", o.*field);
                   return std::string(buf);
                 }});
  };
  auto add_bool = [&b](const std::string& key, const std::string& flag, bool Opts::* field) {
    b.push_back({key, flag,
                 [key, field](Opts& o, const std::string& v) { o.*field = to_bool(key, v); },
                 [field](const Opts& o) { return std::string(o.*field ? "true" : "false"); }});
  };
  auto add_str = [&b](const std::string& key, const std::string& flag, std::string Opts::* field) {
    b.push_back({key, flag, [field](Opts& o, const std::string& v) { o.*field = v; },
                 [field](const Opts& o) { return o.*field; }});
  };

  add_i64("model.hidden", "--hidden", &Opts::hidden);
  add_i64("model.rbf", "--rbf", &Opts::rbf);
  add_i64("model.layers", "--layers", &Opts::layers);
  add_f64("model.cutoff", "--cutoff", &Opts::cutoff);
  add_bool("model.use_d2", "--use-d2", &Opts::use_d2);
  add_bool("model.use_d3", "--use-d3", &Opts::use_d3);
  add_bool("model.share_filters", "--share-filters", &Opts::share_filters);
  add_bool("model.schnet_mode", "--schnet-mode", &Opts::schnet_mode);
  add_bool("model.global_frame", "--global-frame", &Opts::global_frame);
  add_bool("model.species_shift", "--species-shift", &Opts::species_shift);

  b.push_back({"train.lr", "--lr",
               [](Opts& o, const std::string& v) { o.lr = to_f64("train.lr", v); },
               [](const Opts& o) {
                 char buf[40];
                 std::snprintf(buf, sizeof buf, "%g", o.lr);
                 return std::string(buf);
               }});
  add_i64("train.batch_size", "--batch-size", &Opts::batch_size);
  add_i64("train.max_epochs", "--max-epochs", &Opts::max_epochs);
  add_i64("train.patience", "--patience", &Opts::patience);
  b.push_back({"train.rho", "--rho",
               [](Opts& o, const std::string& v) {
                 o.rho = to_f64("train.rho", v);
                 o.rho_explicit = true;
               },
               [](const Opts& o) {
                 char buf[40];
                 std::snprintf(buf, sizeof buf, "%g", o.rho);
                 return std::string(buf);
               }});
  b.push_back({"train.seed", "--seed",
               [](Opts& o, const std::string& v) { o.seed = to_u64("train.seed", v); },
               [](const Opts& o) { return std::to_string(o.seed); }});
  add_i64("train.workers", "--workers", &Opts::workers);
  add_f64("train.sched_factor", "--sched-factor", &Opts::sched_factor);
  add_i64("train.sched_patience", "--sched-patience", &Opts::sched_patience);
  add_f64("train.min_lr", "--min-lr", &Opts::min_lr);
  add_f64("train.val_frac", "--val-frac", &Opts::val_frac);

  add_str("io.data", "--data", &Opts::data);
  add_str("io.val_data", "--val-data", &Opts::val_data);
  add_str("io.checkpoint", "--checkpoint", &Opts::checkpoint);
  add_str("io.out_dir", "--out", &Opts::out_dir);
  add_str("io.output", "--output", &Opts::output);
  add_str("io.report", "--report", &Opts::report);
  return b;
}

void dump_config(std::ostream& os) {
  const Opts defaults;
  const auto bindings = key_bindings();
  std::string section;
  os << "# gnnlf configuration — built-in defaults\n";
  os << "# precedence: command-line flag > config file > built-in default\n";
  for (const auto& kb : bindings) {
    const auto dot = kb.key.find('.');
    const std::string sec = kb.key.substr(0, dot);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << kb.key.substr(dot + 1) << " = " << kb.show(defaults) << "\n";
  }
}

// Applies config-file entries for every key whose flag was not given on the
// command line. Unknown keys are configuration errors.
void apply_config_file(Opts& opts, const std::string& path, const std::set<std::string>& given) {
  const auto bindings = key_bindings();
  for (const auto& [key, value] : parse_config_file(path)) {
    const auto it =
        std::find_if(bindings.begin(), bindings.end(), [&](const KeyBinding& kb) { return kb.key == key; });
    if (it == bindings.end()) throw ConfigError("unknown config key '" + key + "'");
    if (given.count(it->flag)) continue;  // flag wins over file
    it->apply(opts, value);
  }
}

// Names of all long flags the user actually passed on the active subcommand.
std::set<std::string> flags_given(const CLI::App* cmd) {
  std::set<std::string> out;
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->count() == 0) continue;
    for (const std::string& n : opt->get_lnames()) out.insert("--" + n);
  }
  return out;
}

void require_file(const std::string& field, const std::string& path) {
  if (path.empty()) throw ConfigError(field + " is required but no path was given");
  if (!fs::exists(path)) throw ConfigError(field + ": file does not exist: '" + path + "'");
}

void ensure_parent_dir(const std::string& field, const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec)
    throw ConfigError(field + ": cannot create directory '" + parent.string() +
                      "': " + ec.message());
}

std::vector<int64_t> species_of(const std::vector<gnnlf::MoleculeConf>& confs) {
  std::set<int64_t> s;
  for (const auto& c : confs)
    for (int64_t z : c.z) s.insert(z);
  return {s.begin(), s.end()};
}

std::string format_g(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.8g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------
int cmd_train(const Opts& o) {
  gnnlf::ModelConfig mcfg = o.model_config();
  gnnlf::TrainConfig tcfg = o.train_config();
  mcfg.validate();
  tcfg.validate();

  const auto all = gnnlf::load_extxyz(o.data);
  if (all.empty()) throw std::runtime_error("io.data: '" + o.data + "' contains no frames");

  std::vector<gnnlf::MoleculeConf> train_set, val_set;
  if (!o.val_data.empty()) {
    train_set = all;
    val_set = gnnlf::load_extxyz(o.val_data);
    if (val_set.empty())
      throw std::runtime_error("io.val_data: '" + o.val_data + "' contains no frames");
  } else {
    if (all.size() < 2)
      throw std::runtime_error(
          "dataset has a single frame; an internal train/validation split needs at least two "
          "(or pass --val-data)");
    size_t val_n = static_cast<size_t>(o.val_frac * static_cast<double>(all.size()) + 0.5);
    val_n = std::max<size_t>(1, std::min(val_n, all.size() - 1));
    const auto idx = gnnlf::split_dataset(all.size(), all.size() - val_n, val_n, o.seed);
    for (size_t i : idx.train) train_set.push_back(all[i]);
    for (size_t i : idx.val) val_set.push_back(all[i]);
  }

  bool any_forces = false;
  for (const auto& c : train_set) any_forces |= !c.forces.empty();
  if (!any_forces && !o.rho_explicit) {
    tcfg.rho = 0.0;
    std::cout << "no force targets found; training on energies only (rho = 0)\n";
  }

  const auto species = species_of(train_set);
  const auto initial = gnnlf::ModelParams::init(mcfg, species, o.seed);

  std::cout << "training: " << train_set.size() << " train / " << val_set.size()
            << " val conformations, " << species.size() << " species, "
            << gnnlf::parameter_count(initial) << " parameters\n";

  const auto result = gnnlf::train(initial, mcfg, train_set, val_set, tcfg,
                                   gnnlf::TargetKind::EnergyForces);

  const std::string history_path = (fs::path(o.out_dir) / "history.jsonl").string();
  {
    std::ofstream hf(history_path);
    if (!hf) throw std::runtime_error("cannot write history file '" + history_path + "'");
    for (const auto& row : result.history) {
      const json j = {{"epoch", row.epoch},          {"train_loss", row.train_loss},
                      {"val_mae_energy", row.val_mae_e}, {"val_mae_forces", row.val_mae_f},
                      {"val_metric", row.val_metric},    {"lr", row.lr}};
      hf << j.dump() << "\n";
    }
  }

  if (result.aborted_nonfinite) {
    std::cerr << "error: training aborted on a non-finite loss (history written to "
              << history_path << ", no checkpoint saved)\n";
    return 1;
  }

  const std::string ckpt_path = (fs::path(o.out_dir) / "model.ckpt").string();
  gnnlf::save_model(ckpt_path, result.best_params, mcfg);

  const gnnlf::EpochRow* best = nullptr;
  for (const auto& row : result.history)
    if (row.epoch == result.best_epoch) best = &row;

  std::ostringstream summary;
  summary << "epochs run: " << result.history.size() << "\n";
  summary << "best epoch: " << result.best_epoch << "\n";
  if (best) {
    summary << "best val MAE (energy): " << format_g(best->val_mae_e) << " kcal/mol\n";
    if (best->val_mae_f > 0.0)
      summary << "best val MAE (forces): " << format_g(best->val_mae_f) << " kcal/mol/A\n";
  }
  summary << "checkpoint: " << ckpt_path << "\n";
  summary << "history: " << history_path << "\n";

  const std::string summary_path = (fs::path(o.out_dir) / "summary.txt").string();
  std::ofstream sf(summary_path);
  sf << summary.str();
  std::cout << summary.str();
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------
int cmd_eval(const Opts& o) {
  const auto [params, cfg] = gnnlf::load_model(o.checkpoint);
  const auto confs = gnnlf::load_extxyz(o.data);
  if (confs.empty()) throw std::runtime_error("io.data: '" + o.data + "' contains no frames");

  const auto r = gnnlf::evaluate_mae(params, cfg, confs);

  json j = {{"n_molecules", r.n_molecules},
            {"mae_energy", r.mae_energy},
            {"ms_per_molecule", r.ms_per_molecule}};
  std::cout << "energy MAE: " << format_g(r.mae_energy) << " kcal/mol\n";
  if (r.mae_forces.has_value()) {
    std::cout << "force MAE: " << format_g(*r.mae_forces) << " kcal/mol/A\n";
    j["mae_forces"] = *r.mae_forces;
  }
  std::cout << "inference: " << format_g(r.ms_per_molecule) << " ms per molecule ("
            << r.n_molecules << " molecules)\n";

  const std::string metrics_path =
      o.output.empty() ? (fs::path(o.out_dir) / "metrics.json").string() : o.output;
  std::ofstream mf(metrics_path);
  if (!mf) throw std::runtime_error("cannot write metrics file '" + metrics_path + "'");
  mf << j.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------
int cmd_predict(const Opts& o) {
  const auto [params, cfg] = gnnlf::load_model(o.checkpoint);
  auto confs = gnnlf::load_extxyz(o.data);
  if (confs.empty())
    throw std::runtime_error("io.data: '" + o.data + "' contains no frames; nothing written");

  // Predict everything before opening the output so a failure (for example a
  // species absent from the checkpoint) leaves no partial file behind.
  for (auto& c : confs) {
    auto ef = gnnlf::predict_energy_forces(c, params, cfg);
    c.energy = ef.energy;
    c.forces = std::move(ef.forces);
  }

  const std::string out_path =
      o.output.empty() ? (fs::path(o.out_dir) / "predictions.extxyz").string() : o.output;
  gnnlf::save_extxyz(out_path, confs);
  std::cout << "wrote " << confs.size() << " frame" << (confs.size() == 1 ? "" : "s") << " to "
            << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------
int cmd_verify(const Opts& o, const std::vector<std::string>& suites) {
  const auto names = suites.empty() ? gnnlf::verify_suite_names() : suites;
  const auto results = gnnlf::run_verify_suites(names, o.seed);

  json report;
  report["seed"] = o.seed;
  report["suites"] = json::array();
  bool all_pass = true;
  size_t passed = 0;
  for (const auto& r : results) {
    std::cout << r.name << std::string(r.name.size() < 14 ? 14 - r.name.size() : 1, ' ')
              << (r.pass ? "PASS" : "FAIL") << "\n";
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) {
      std::cout << "    " << k << " = " << format_g(v) << "\n";
      metrics[k] = v;
    }
    report["suites"].push_back({{"name", r.name}, {"pass", r.pass}, {"metrics", metrics}});
    all_pass &= r.pass;
    passed += r.pass ? 1 : 0;
  }
  report["all_pass"] = all_pass;
  std::cout << "verify: " << passed << "/" << results.size() << " suites passed\n";
  std::cout << report.dump() << "\n";

  if (!o.report.empty()) {
    std::ofstream rf(o.report);
    if (!rf) throw std::runtime_error("cannot write report file '" + o.report + "'");
    rf << report.dump(2) << "\n";
  }
  return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gnnlf — local-frame graph network for molecular potential-energy surfaces"};
  app.set_help_all_flag("--help-all", "print help for every subcommand");

  Opts opts;
  bool want_dump = false;
  std::string config_path;
  std::vector<std::string> suites;

  app.add_flag("--dump-config", want_dump,
               "print every config key with its built-in default and exit");

  // The same option set is registered on each subcommand that uses it, bound
  // to one shared Opts instance; flags_given() later reports which flags the
  // user actually passed so the config file can fill in the rest.
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (flat key = value with [sections])");
    cmd->add_option("--seed", opts.seed, "random seed (init, splits, shuffling, suites)");
    cmd->add_option("--workers", opts.workers, "worker count (1 = bitwise reproducible)");
    cmd->add_option("--out", opts.out_dir, "output directory");
  };
  auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--hidden", opts.hidden, "feature channels per atom");
    cmd->add_option("--rbf", opts.rbf, "radial basis size");
    cmd->add_option("--layers", opts.layers, "message-passing layers");
    cmd->add_option("--cutoff", opts.cutoff, "neighbor cutoff radius (Angstrom)");
    cmd->add_flag("--use-d2,!--no-use-d2", opts.use_d2, "neighbor-frame projection channel");
    cmd->add_flag("--use-d3,!--no-use-d3", opts.use_d3, "frame-transport projection channel");
    cmd->add_flag("--share-filters,!--no-share-filters", opts.share_filters,
                  "share filter weights across layers");
    cmd->add_flag("--schnet-mode,!--no-schnet-mode", opts.schnet_mode,
                  "distance-only ablation (no frames)");
    cmd->add_flag("--global-frame,!--no-global-frame", opts.global_frame,
                  "single shared frame ablation");
    cmd->add_flag("--species-shift,!--no-species-shift", opts.species_shift,
                  "per-species energy shift");
  };
  auto add_train = [&](CLI::App* cmd) {
    cmd->add_option("--lr", opts.lr, "initial learning rate");
    cmd->add_option("--batch-size", opts.batch_size, "minibatch size");
    cmd->add_option("--max-epochs", opts.max_epochs, "epoch limit");
    cmd->add_option("--patience", opts.patience, "early-stopping patience (epochs)");
    cmd->add_option("--rho", opts.rho, "force-loss weight in [0, 1]");
    cmd->add_option("--sched-factor", opts.sched_factor, "plateau decay factor");
    cmd->add_option("--sched-patience", opts.sched_patience, "plateau patience (epochs)");
    cmd->add_option("--min-lr", opts.min_lr, "learning-rate floor");
    cmd->add_option("--val-frac", opts.val_frac,
                    "validation fraction when --val-data is not given");
  };

  CLI::App* train = app.add_subcommand("train", "fit a model on an extended-XYZ dataset");
  add_common(train);
  add_model(train);
  add_train(train);
  train->add_option("--data", opts.data, "training dataset (extended XYZ)");
  train->add_option("--val-data", opts.val_data, "validation dataset (extended XYZ)");

  CLI::App* eval = app.add_subcommand("eval", "report MAE metrics of a checkpoint on a dataset");
  add_common(eval);
  eval->add_option("--checkpoint", opts.checkpoint, "model checkpoint");
  eval->add_option("--data", opts.data, "evaluation dataset (extended XYZ)");
  eval->add_option("--output", opts.output, "metrics JSON path (default <out>/metrics.json)");

  CLI::App* predict = app.add_subcommand("predict", "attach predicted energies and forces");
  add_common(predict);
  predict->add_option("--checkpoint", opts.checkpoint, "model checkpoint");
  predict->add_option("--data", opts.data, "input structures (extended XYZ)");
  predict->add_option("--output", opts.output,
                      "output extended-XYZ path (default <out>/predictions.extxyz)");

  CLI::App* verify = app.add_subcommand("verify", "run the model-invariant verification suites");
  add_common(verify);
  verify->add_option("--suite", suites,
                     "suite name (repeatable; omit to run all): " +
                         [] {
                           std::string s;
                           for (const auto& n : gnnlf::verify_suite_names())
                             s += (s.empty() ? "" : ", ") + n;
                           return s;
                         }());
  verify->add_option("--report", opts.report, "write the JSON report to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (want_dump) {
    dump_config(std::cout);
    return 0;
  }

  CLI::App* active = nullptr;
  for (CLI::App* cmd : {train, eval, predict, verify})
    if (cmd->parsed()) active = cmd;
  if (active == nullptr) {
    std::cerr << "config error: no command given (expected train, eval, predict or verify; "
                 "see --help)\n";
    return 2;
  }

  // ---- resolution phase: flag > config file > default; exit code 2 ----
  try {
    if (active == train && active->count("--rho") > 0) opts.rho_explicit = true;
    if (!config_path.empty()) {
      require_file("--config", config_path);
      apply_config_file(opts, config_path, flags_given(active));
    }

    if (active == train || active == eval || active == predict)
      require_file("io.data (--data)", opts.data);
    if (active == eval || active == predict)
      require_file("io.checkpoint (--checkpoint)", opts.checkpoint);
    if (active == train && !opts.val_data.empty())
      require_file("io.val_data (--val-data)", opts.val_data);
    if (opts.workers < 1) throw ConfigError("train.workers must be >= 1");
    if (active == train && !(opts.val_frac > 0.0 && opts.val_frac < 1.0))
      throw ConfigError("train.val_frac must lie in (0, 1)");

    if (active == train || active == eval || active == predict) {
      std::error_code ec;
      fs::create_directories(opts.out_dir, ec);
      if (ec)
        throw ConfigError("io.out_dir: cannot create '" + opts.out_dir + "': " + ec.message());
      if (!opts.output.empty()) ensure_parent_dir("io.output", opts.output);
    }
    if (!opts.report.empty()) ensure_parent_dir("io.report", opts.report);

    if (active == train) {
      opts.model_config().validate();
      opts.train_config().validate();
    }
    if (active == verify) {
      const auto known = gnnlf::verify_suite_names();
      for (const auto& s : suites)
        if (std::find(known.begin(), known.end(), s) == known.end()) {
          std::string valid;
          for (const auto& n : known) valid += (valid.empty() ? "" : ", ") + n;
          throw ConfigError("unknown suite '" + s + "' (valid: " + valid + ")");
        }
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  // ---- run phase: exit code 1 on runtime failure, 3 on verify failure ----
  try {
    if (active == train) return cmd_train(opts);
    if (active == eval) return cmd_eval(opts);
    if (active == predict) return cmd_predict(opts);
    return cmd_verify(opts, suites);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
