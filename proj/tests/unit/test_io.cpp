#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "granular/cli/config.hpp"
#include "granular/cli/toml.hpp"
#include "granular/errors.hpp"
#include "granular/io.hpp"

namespace {

namespace fs = std::filesystem;
using granular::ConfigError;
using granular::cli::parse_toml;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("granular_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Toml, ScalarsArraysAndSections) {
  const auto doc = parse_toml(R"(
top = 1
[run]
tau = 1e-3     # comment
n = 1_000
name = "a # b"
flag = true
xs = [1, 2.5, -3]
nested = [[1.0, 0.0], [0.0, 1.0]]
)");
  EXPECT_EQ(doc.at("").at("top").as_int("top"), 1);
  const auto& run = doc.at("run");
  EXPECT_DOUBLE_EQ(run.at("tau").as_double("tau"), 1e-3);
  EXPECT_EQ(run.at("n").as_int("n"), 1000);
  EXPECT_EQ(run.at("name").as_string("name"), "a # b");
  EXPECT_TRUE(run.at("flag").as_bool("flag"));
  EXPECT_EQ(run.at("xs").as_array("xs").size(), 3u);
  EXPECT_DOUBLE_EQ(run.at("xs").as_array("xs")[2].as_double("xs"), -3.0);
  EXPECT_EQ(run.at("nested").as_array("nested")[1].as_array("nested").size(), 2u);
  // Integers read as doubles, not the other way round.
  EXPECT_DOUBLE_EQ(run.at("n").as_double("n"), 1000.0);
  EXPECT_THROW(run.at("tau").as_int("tau"), ConfigError);
}

TEST(Toml, Errors) {
  EXPECT_THROW(parse_toml("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(parse_toml("[s]\n[s]\n"), ConfigError);
  EXPECT_THROW(parse_toml("a = \n"), ConfigError);
  EXPECT_THROW(parse_toml("a = \"open\n"), ConfigError);
  EXPECT_THROW(parse_toml("a = [1, 2\n"), ConfigError);
  EXPECT_THROW(parse_toml("a = nan\n"), ConfigError);
  EXPECT_THROW(parse_toml("[unclosed\n"), ConfigError);
  try {
    parse_toml("ok = 1\nbad = @\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(Config, RunPresetsLoad) {
  for (const char* name : {"model_a_run.toml", "model_b_run.toml", "model_g_run.toml", "model_h_run.toml"}) {
    const auto doc = granular::cli::parse_toml_file(fs::path(GRANULAR_CONFIG_DIR) / name);
    EXPECT_NO_THROW(granular::cli::load_run_config(doc)) << name;
  }
  const auto a = granular::cli::load_run_config(
      granular::cli::parse_toml_file(fs::path(GRANULAR_CONFIG_DIR) / "model_a_run.toml"));
  EXPECT_EQ(a.model.id, 'A');
  EXPECT_EQ(a.n_particles, 10000u);
  EXPECT_EQ(a.scheme.n_steps, 1000);
  EXPECT_EQ(a.initial.size(), 3u);
}

TEST(Config, TFinalConvertsToSteps) {
  const auto s = granular::cli::load_run_config(parse_toml(R"(
[model]
id = "B"
[run]
n_particles = 10
tau = 0.01
t_final = 0.5
)"));
  EXPECT_EQ(s.scheme.n_steps, 50);
  EXPECT_EQ(s.scheme.mode, granular::SchemeMode::interacting);
}

TEST(Config, InlineMixtureAndProx) {
  const auto s = granular::cli::load_run_config(parse_toml(R"(
[model]
id = "A"
[run]
n_particles = 10
tau = 0.01
n_steps = 3
[initial]
weights = [0.5, 0.5]
means = [[-1.0], [1.0]]
covariances = [[[1.0]], [[0.25]]]
[prox]
max_iters = 50
epsilon_target = 1e-6
)"));
  EXPECT_EQ(s.initial.size(), 2u);
  EXPECT_DOUBLE_EQ(s.initial.covariances[1](0, 0), 0.25);
  EXPECT_EQ(s.scheme.prox.max_iters, 50);
  EXPECT_DOUBLE_EQ(s.scheme.prox.epsilon_target, 1e-6);
}

TEST(Config, RejectsInvalidRunConfigs) {
  const std::string head = "[model]\nid = \"A\"\n[run]\nn_particles = 10\ntau = 0.01\n";
  EXPECT_THROW(granular::cli::load_run_config(parse_toml(head)), ConfigError);  // no length
  EXPECT_THROW(granular::cli::load_run_config(parse_toml(head + "n_steps = 2\nt_final = 1.0\n")), ConfigError);
  EXPECT_THROW(granular::cli::load_run_config(parse_toml(head + "n_steps = 2\nbogus = 1\n")), ConfigError);
  EXPECT_THROW(granular::cli::load_run_config(parse_toml(head + "n_steps = 2\n[extra]\n")), ConfigError);
  EXPECT_THROW(granular::cli::load_run_config(parse_toml(head + "n_steps = 2\n[initial]\npreset = \"x\"\n")),
               ConfigError);
  EXPECT_THROW(granular::cli::load_run_config(parse_toml("[model]\nid = \"Q\"\n[run]\nn_particles = 1\ntau = 0.1\nn_steps = 1\n")),
               ConfigError);
  EXPECT_THROW(granular::cli::load_run_config(parse_toml(head + "n_steps = 2\n[output]\nparticles = \"all\"\n")),
               ConfigError);
}

TEST(Config, SweepPresetsLoad) {
  const auto tau = granular::cli::load_tau_sweep_config(
      granular::cli::parse_toml_file(fs::path(GRANULAR_CONFIG_DIR) / "model_a_sweep_tau.toml"));
  EXPECT_EQ(tau.sweep.taus.size(), 4u);
  EXPECT_EQ(tau.sweep.n_particles, 20000u);
  const auto n = granular::cli::load_n_sweep_config(
      granular::cli::parse_toml_file(fs::path(GRANULAR_CONFIG_DIR) / "model_f_sweep_n.toml"));
  EXPECT_EQ(n.sweep.ns, (std::vector<std::size_t>{64, 128, 256, 512}));
  EXPECT_EQ(n.sweep.reference_n, 2048u);
}

TEST(Config, SweepCrossTypeKeysRejected) {
  const auto doc = parse_toml("[model]\nid = \"A\"\n[sweep]\ntaus = [0.1, 0.05]\nns = [8, 16]\n");
  EXPECT_THROW(granular::cli::load_tau_sweep_config(doc), ConfigError);
  EXPECT_THROW(granular::cli::load_n_sweep_config(doc), ConfigError);
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(granular::io::format_double(x)), x);
  }
  EXPECT_EQ(granular::io::format_double(0.1), "0.10000000000000001");
}

TEST(Io, ParticlesCsvRoundTrip) {
  const fs::path dir = scratch_dir("csv");
  const std::vector<double> pts{0.1, -2.0, 1.0 / 3.0, 4e-17};
  granular::io::write_atomic(dir / "sub" / "p.csv", granular::io::particles_csv(pts, 2));
  EXPECT_EQ(slurp(dir / "sub" / "p.csv").substr(0, 6), "x0,x1\n");
  EXPECT_FALSE(fs::exists(dir / "sub" / "p.csv.tmp"));
  const auto cloud = granular::io::read_particles_csv(dir / "sub" / "p.csv");
  EXPECT_EQ(cloud.dim, 2u);
  EXPECT_EQ(cloud.data, pts);
  fs::remove_all(dir);
}

TEST(Io, ParticlesCsvErrors) {
  const fs::path dir = scratch_dir("csv_err");
  granular::io::write_atomic(dir / "ragged.csv", "x0,x1\n1,2\n3\n");
  EXPECT_THROW(granular::io::read_particles_csv(dir / "ragged.csv"), ConfigError);
  granular::io::write_atomic(dir / "junk.csv", "1,abc\n");
  EXPECT_THROW(granular::io::read_particles_csv(dir / "junk.csv"), ConfigError);
  granular::io::write_atomic(dir / "empty.csv", "");
  EXPECT_THROW(granular::io::read_particles_csv(dir / "empty.csv"), ConfigError);
  EXPECT_THROW(granular::io::read_particles_csv(dir / "missing.csv"), ConfigError);
  granular::io::write_atomic(dir / "bare.csv", "1.5\n-2\n");
  EXPECT_EQ(granular::io::read_particles_csv(dir / "bare.csv").data, (std::vector<double>{1.5, -2.0}));
  fs::remove_all(dir);
}

TEST(Io, RunRecordJsonFields) {
  const auto model = granular::find_model("A");
  granular::SchemeConfig cfg;
  cfg.tau = 0.1;
  cfg.n_steps = 2;
  cfg.seed = 3;
  cfg.prox = granular::ProxConfig::defaults(0.1, 1.0);
  granular::RunOptions opts;
  opts.record_every = 1;
  opts.coupled_ou_reference = true;
  const auto rec = granular::run(granular::sample_mixture(model.default_initial(), 20, 3), model, cfg, opts);
  const auto j = nlohmann::json::parse(granular::io::run_record_json(rec));
  EXPECT_EQ(j["model"]["id"], "A");
  EXPECT_EQ(j["config"]["tau"], 0.1);
  EXPECT_EQ(j["config"]["seed"], 3);
  EXPECT_EQ(j["n_particles"], 20);
  EXPECT_EQ(j["wall_ms"], 0.0);
  ASSERT_EQ(j["snapshots"].size(), 3u);
  EXPECT_EQ(j["snapshots"][2]["step"], 2);
  EXPECT_TRUE(j["snapshots"][1].contains("w2_reference"));
  EXPECT_EQ(j["snapshots"][1]["variance"][0].get<double>(), rec.snapshots[1].variance[0]);
}

TEST(Io, SweepOutputs) {
  granular::TauSweepConfig cfg;
  cfg.taus = {0.1, 0.05};
  cfg.n_particles = 100;
  cfg.t_eval = 0.1;
  cfg.replications = 2;
  const auto rec = granular::tau_sweep(granular::find_model("A"), cfg);
  const std::string csv = granular::io::sweep_csv(rec);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sweep_value,replication,w2,w2_squared,seed,wall_ms");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  const auto j = nlohmann::json::parse(granular::io::sweep_summary_json(rec));
  EXPECT_EQ(j["sweep_variable"], "tau");
  EXPECT_EQ(j["fitted_quantity"], "w2_squared");
  EXPECT_TRUE(j["slope"].is_number());
  EXPECT_EQ(j["summary"].size(), 2u);
}

TEST(Io, ModelsListing) {
  const auto j = nlohmann::json::parse(granular::io::models_json());
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 8u);
  EXPECT_EQ(j[1]["description"], "V1 + W1, repulsive");
  const std::string table = granular::io::models_table();
  EXPECT_NE(table.find("V1 + W1, repulsive"), std::string::npos);
}

}  // namespace
