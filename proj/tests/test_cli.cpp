// Black-box tests of the command-line binary: the tests spawn the real
// executable (path injected as GNNLF_CLI_PATH at compile time), then inspect
// exit codes, captured output and the files each command writes.

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include "gnnlf/extxyz.hpp"
#include "gnnlf/training.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("gnnlf_cli_" + std::to_string(static_cast<long>(::getpid())) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const TempDir& dir, const std::string& args) {
  static std::atomic<int> counter{0};
  const int id = counter++;
  const std::string out_file = dir.file("run_" + std::to_string(id) + ".out");
  const std::string err_file = dir.file("run_" + std::to_string(id) + ".err");
  const std::string cmd = std::string("\"") + GNNLF_CLI_PATH + "\" " + args + " > \"" + out_file +
                          "\" 2> \"" + err_file + "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

void write_lj(const std::string& path, int64_t n, uint64_t seed) {
  gnnlf::save_extxyz(path, gnnlf::testdata::lj_dataset(n, seed, 3));
}

std::vector<json> read_history(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

// Fast-training arguments shared by the workflow tests.
const std::string kTinyModel = "--hidden 12 --rbf 8 --layers 2 --cutoff 4 ";
const std::string kTinyTrain = "--lr 0.005 --batch-size 16 --rho 0.2 --sched-patience 50 ";

}  // namespace

TEST_CASE("cli: missing or invalid configuration exits with code 2") {
  TempDir d;

  SECTION("missing data path names the field") {
    const auto r = run_cli(d, "train --data " + d.file("missing.extxyz"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("io.data") != std::string::npos);
    CHECK(r.err.find("missing.extxyz") != std::string::npos);
  }
  SECTION("data flag omitted entirely") {
    const auto r = run_cli(d, "train");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("io.data") != std::string::npos);
  }
  SECTION("no subcommand") {
    const auto r = run_cli(d, "");
    CHECK(r.exit_code == 2);
  }
  SECTION("unknown flag") {
    const auto r = run_cli(d, "verify --frobnicate");
    CHECK(r.exit_code == 2);
  }
  SECTION("unknown suite lists the valid names") {
    const auto r = run_cli(d, "verify --suite nosuch");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("nosuch") != std::string::npos);
    CHECK(r.err.find("gradcheck") != std::string::npos);
  }
  SECTION("unknown config key") {
    std::ofstream(d.file("bad.cfg")) << "[model]\nhiden = 3\n";
    write_lj(d.file("data.extxyz"), 4, 1);
    const auto r = run_cli(d, "train --config " + d.file("bad.cfg") + " --data " +
                                  d.file("data.extxyz"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("hiden") != std::string::npos);
  }
  SECTION("cutoff outside the supported range") {
    write_lj(d.file("data.extxyz"), 4, 1);
    const auto r = run_cli(d, "train --data " + d.file("data.extxyz") + " --cutoff 2");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("cutoff") != std::string::npos);
  }
}

TEST_CASE("cli: dump-config prints every built-in default") {
  TempDir d;
  const auto r = run_cli(d, "--dump-config");
  REQUIRE(r.exit_code == 0);
  for (const char* needle :
       {"[model]", "[train]", "[io]", "hidden = 128", "rbf = 32", "layers = 4", "cutoff = 5",
        "use_d2 = false", "share_filters = true", "lr = 0.001", "batch_size = 16", "rho = 0.95",
        "seed = 0", "workers = 1", "out_dir = ."})
    CHECK(r.out.find(needle) != std::string::npos);
}

TEST_CASE("cli: config precedence is flag over file over built-in default") {
  TempDir d;
  write_lj(d.file("data.extxyz"), 12, 3);
  std::ofstream(d.file("run.cfg")) << "# three-layer fixture\n"
                                      "[model]\n"
                                      "hidden = 12\n"
                                      "cutoff = 4.0\n"
                                      "[train]\n"
                                      "lr = 0.25\n"
                                      "max_epochs = 2\n"
                                      "rho = 0\n"
                                      "[io]\n"
                                      "data = "
                                   << d.file("data.extxyz") << "\n";

  // --lr on the command line must beat lr in the file; hidden comes from the
  // file; rbf stays at the built-in default.
  const auto r =
      run_cli(d, "train --config " + d.file("run.cfg") + " --lr 0.125 --out " + d.file("out"));
  REQUIRE(r.exit_code == 0);

  const auto rows = read_history(d.file("out/history.jsonl"));
  REQUIRE(rows.size() == 2);  // max_epochs from the file
  for (const auto& row : rows) CHECK(row.at("lr").get<double>() == 0.125);

  const auto [params, cfg] = gnnlf::load_model(d.file("out/model.ckpt"));
  CHECK(cfg.hidden == 12);   // config file
  CHECK(cfg.rbf == 32);      // built-in default
  CHECK(cfg.cutoff == 4.0);  // config file
}

TEST_CASE("cli: train writes history, checkpoint and summary; reruns are identical") {
  TempDir d;
  write_lj(d.file("data.extxyz"), 16, 9);
  const std::string base = "train --data " + d.file("data.extxyz") + " " + kTinyModel +
                           kTinyTrain + "--max-epochs 25 --seed 4 --out ";

  const auto r1 = run_cli(d, base + d.file("a"));
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.out.find("best epoch") != std::string::npos);
  CHECK(r1.out.find("val MAE") != std::string::npos);
  CHECK(fs::exists(d.file("a/model.ckpt")));
  CHECK(fs::exists(d.file("a/summary.txt")));

  const auto rows = read_history(d.file("a/history.jsonl"));
  REQUIRE(rows.size() == 25);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].at("epoch").get<int64_t>() == static_cast<int64_t>(i + 1));
    CHECK(std::isfinite(rows[i].at("train_loss").get<double>()));
    CHECK(rows[i].at("val_mae_energy").get<double>() >= 0.0);
  }

  const auto r2 = run_cli(d, base + d.file("b"));
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(d.file("a/history.jsonl")) == slurp(d.file("b/history.jsonl")));
  CHECK(slurp(d.file("a/model.ckpt")) == slurp(d.file("b/model.ckpt")));
}

TEST_CASE("cli: max-epochs 1 produces exactly one history row") {
  TempDir d;
  write_lj(d.file("data.extxyz"), 8, 2);
  const auto r = run_cli(d, "train --data " + d.file("data.extxyz") + " " + kTinyModel +
                                kTinyTrain + "--max-epochs 1 --out " + d.file("out"));
  REQUIRE(r.exit_code == 0);
  CHECK(read_history(d.file("out/history.jsonl")).size() == 1);
}

TEST_CASE("cli: eval reports the same metrics as the library and omits absent force targets") {
  TempDir d;
  write_lj(d.file("data.extxyz"), 12, 5);
  REQUIRE(run_cli(d, "train --data " + d.file("data.extxyz") + " " + kTinyModel + kTinyTrain +
                         "--max-epochs 20 --out " + d.file("out"))
              .exit_code == 0);

  const auto [params, cfg] = gnnlf::load_model(d.file("out/model.ckpt"));
  const auto confs = gnnlf::load_extxyz(d.file("data.extxyz"));

  SECTION("with force targets") {
    const auto r = run_cli(d, "eval --checkpoint " + d.file("out/model.ckpt") + " --data " +
                                  d.file("data.extxyz") + " --output " + d.file("m.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("energy MAE") != std::string::npos);
    CHECK(r.out.find("force MAE") != std::string::npos);
    CHECK(r.out.find("ms per molecule") != std::string::npos);

    const auto m = json::parse(slurp(d.file("m.json")));
    const auto want = gnnlf::evaluate_mae(params, cfg, confs);
    CHECK(m.at("mae_energy").get<double>() == Catch::Approx(want.mae_energy).epsilon(1e-12));
    REQUIRE(want.mae_forces.has_value());
    CHECK(m.at("mae_forces").get<double>() == Catch::Approx(*want.mae_forces).epsilon(1e-12));
    CHECK(m.at("ms_per_molecule").get<double>() > 0.0);
    CHECK(m.at("n_molecules").get<size_t>() == confs.size());
  }

  SECTION("force MAE is omitted, not zero, when the dataset lacks forces") {
    auto stripped = confs;
    for (auto& c : stripped) c.forces.clear();
    gnnlf::save_extxyz(d.file("noforce.extxyz"), stripped);

    const auto r = run_cli(d, "eval --checkpoint " + d.file("out/model.ckpt") + " --data " +
                                  d.file("noforce.extxyz") + " --output " + d.file("nf.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("force MAE") == std::string::npos);
    const auto m = json::parse(slurp(d.file("nf.json")));
    CHECK_FALSE(m.contains("mae_forces"));
    CHECK(m.at("mae_energy").get<double>() > 0.0);
  }
}

TEST_CASE("cli: predict round-trips through extended XYZ") {
  TempDir d;
  write_lj(d.file("data.extxyz"), 10, 7);
  REQUIRE(run_cli(d, "train --data " + d.file("data.extxyz") + " " + kTinyModel + kTinyTrain +
                         "--max-epochs 15 --out " + d.file("out"))
              .exit_code == 0);
  const std::string ckpt = d.file("out/model.ckpt");

  SECTION("written values match in-memory predictions to 12 digits") {
    const auto r = run_cli(d, "predict --checkpoint " + ckpt + " --data " +
                                  d.file("data.extxyz") + " --output " + d.file("pred.extxyz"));
    REQUIRE(r.exit_code == 0);

    const auto [params, cfg] = gnnlf::load_model(ckpt);
    const auto inputs = gnnlf::load_extxyz(d.file("data.extxyz"));
    const auto preds = gnnlf::load_extxyz(d.file("pred.extxyz"));
    REQUIRE(preds.size() == inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
      const auto ef = gnnlf::predict_energy_forces(inputs[i], params, cfg);
      REQUIRE(preds[i].energy.has_value());
      CHECK(*preds[i].energy ==
            Catch::Approx(ef.energy).epsilon(1e-12).margin(1e-12));
      REQUIRE(preds[i].forces.size() == ef.forces.size());
      for (size_t k = 0; k < ef.forces.size(); ++k)
        CHECK(preds[i].forces[k] ==
              Catch::Approx(ef.forces[k]).epsilon(1e-12).margin(1e-12));
    }
  }

  SECTION("single molecule produces a single output frame") {
    const auto one = std::vector<gnnlf::MoleculeConf>{gnnlf::load_extxyz(d.file("data.extxyz"))[0]};
    gnnlf::save_extxyz(d.file("one.extxyz"), one);
    const auto r = run_cli(d, "predict --checkpoint " + ckpt + " --data " + d.file("one.extxyz") +
                                  " --output " + d.file("one_pred.extxyz"));
    REQUIRE(r.exit_code == 0);
    CHECK(gnnlf::load_extxyz(d.file("one_pred.extxyz")).size() == 1);
  }

  SECTION("empty input fails without writing an output file") {
    std::ofstream(d.file("empty.extxyz")).flush();
    const auto r = run_cli(d, "predict --checkpoint " + ckpt + " --data " + d.file("empty.extxyz") +
                                  " --output " + d.file("never.extxyz"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("no frames") != std::string::npos);
    CHECK_FALSE(fs::exists(d.file("never.extxyz")));
  }

  SECTION("species unseen at training time is an explicit runtime error") {
    gnnlf::MoleculeConf kr;
    kr.z = {36, 36};
    kr.coords = {0, 0, 0, 1.5, 0, 0};
    gnnlf::save_extxyz(d.file("kr.extxyz"), {kr});
    const auto r = run_cli(d, "predict --checkpoint " + ckpt + " --data " + d.file("kr.extxyz") +
                                  " --output " + d.file("kr_pred.extxyz"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("species") != std::string::npos);
    CHECK_FALSE(fs::exists(d.file("kr_pred.extxyz")));
  }
}

TEST_CASE("cli: verify runs the requested suites and reports machine-readably") {
  TempDir d;

  SECTION("suite filtering runs exactly the named suite") {
    const auto r =
        run_cli(d, "verify --suite gradcheck --seed 3 --report " + d.file("report.json"));
    REQUIRE(r.exit_code == 0);
    const auto rep = json::parse(slurp(d.file("report.json")));
    REQUIRE(rep.at("suites").size() == 1);
    CHECK(rep.at("suites")[0].at("name").get<std::string>() == "gradcheck");
    CHECK(rep.at("suites")[0].at("pass").get<bool>());
    CHECK(rep.at("all_pass").get<bool>());
    CHECK(r.out.find("gradcheck") != std::string::npos);
    CHECK(r.out.find("1/1 suites passed") != std::string::npos);
  }

  SECTION("two fast suites by repeating the flag") {
    const auto r = run_cli(d, "verify --suite relpool --suite netforce --report " +
                                  d.file("two.json"));
    REQUIRE(r.exit_code == 0);
    const auto rep = json::parse(slurp(d.file("two.json")));
    REQUIRE(rep.at("suites").size() == 2);
    CHECK(rep.at("suites")[0].at("name").get<std::string>() == "relpool");
    CHECK(rep.at("suites")[1].at("name").get<std::string>() == "netforce");
  }

  SECTION("the last stdout line is a JSON report even without --report") {
    const auto r = run_cli(d, "verify --suite cancellation");
    REQUIRE(r.exit_code == 0);
    const auto nl = r.out.find_last_of('\n', r.out.size() - 2);
    const auto last = r.out.substr(nl + 1);
    const auto rep = json::parse(last);
    CHECK(rep.at("all_pass").get<bool>());
  }
}
