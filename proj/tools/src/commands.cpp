#include "granular/cli/commands.hpp"

#include <chrono>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "granular/cli/config.hpp"
#include "granular/errors.hpp"
#include "granular/io.hpp"
#include "granular/parallel.hpp"
#include "granular/transport.hpp"

namespace granular::cli {
namespace {

int thread_count(const GlobalOptions& g) {
  const int t = g.threads ? *g.threads : default_thread_count();
  return std::max(1, t);
}

std::filesystem::path output_path(const OutputSettings& o, const GlobalOptions& g, const std::string& suffix) {
  const std::filesystem::path dir = g.out_dir ? *g.out_dir : o.dir;
  return dir / (o.name + suffix);
}

void announce(const GlobalOptions& g, std::ostream& out, const std::filesystem::path& p) {
  if (!g.quiet) out << "wrote " << p.string() << '\n';
}

void print_fit(const SweepRecord& r, const GlobalOptions& g, std::ostream& out) {
  if (g.quiet) return;
  for (const auto& row : r.summary) {
    out << fmt::format("  {:>12g}  mean {} = {:.6g}\n", row.value, r.fitted_quantity, row.mean_metric);
  }
  if (r.fit) {
    out << fmt::format("  slope {:.4f}\n", r.fit->slope);
  } else {
    out << "  slope undefined (fewer than two sweep points)\n";
  }
}

}  // namespace

int cmd_models(bool as_json, std::ostream& out) {
  out << (as_json ? io::models_json() : io::models_table());
  return kExitOk;
}

int cmd_run(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out) {
  RunSettings s = load_run_config(parse_toml_file(config));
  if (g.seed) s.scheme.seed = *g.seed;
  s.scheme.threads = thread_count(g);
  s.options.record_timing = g.timing;

  const Ensemble initial = sample_mixture(s.initial, s.n_particles, s.scheme.seed);
  const RunRecord record = run(initial, s.model, s.scheme, s.options);

  const auto json_path = output_path(s.output, g, ".json");
  io::write_atomic(json_path, io::run_record_json(record));
  announce(g, out, json_path);
  if (s.output.particles == ParticleDump::final) {
    const auto p = output_path(s.output, g, "_final.csv");
    io::write_atomic(p, io::particles_csv(record.final_state.positions, record.final_state.dim));
    announce(g, out, p);
  } else if (s.output.particles == ParticleDump::snapshots) {
    for (const auto& snap : record.snapshots) {
      if (!snap.positions) continue;
      const auto p = output_path(s.output, g, fmt::format("_step{:06}.csv", snap.step));
      io::write_atomic(p, io::particles_csv(*snap.positions, record.final_state.dim));
      announce(g, out, p);
    }
  }
  if (!g.quiet) {
    const auto& last = record.snapshots.back();
    out << fmt::format("model {} ({}), N = {}, {} steps of tau = {:g}, t = {:g}\n", s.model.id, s.model.describe(),
                       s.n_particles, s.scheme.n_steps, s.scheme.tau, last.time);
  }
  return kExitOk;
}

int cmd_sweep_tau(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out) {
  TauSweepSettings s = load_tau_sweep_config(parse_toml_file(config));
  if (g.seed) s.sweep.seed = *g.seed;
  s.sweep.threads = thread_count(g);
  s.sweep.record_timing = g.timing;
  const SweepRecord r = tau_sweep(s.model, s.sweep);
  const auto csv = output_path(s.output, g, ".csv");
  const auto json = output_path(s.output, g, ".json");
  io::write_atomic(csv, io::sweep_csv(r));
  io::write_atomic(json, io::sweep_summary_json(r));
  announce(g, out, csv);
  announce(g, out, json);
  print_fit(r, g, out);
  return kExitOk;
}

int cmd_sweep_n(const std::filesystem::path& config, const GlobalOptions& g, std::ostream& out) {
  NSweepSettings s = load_n_sweep_config(parse_toml_file(config));
  if (g.seed) s.sweep.seed = *g.seed;
  s.sweep.threads = thread_count(g);
  s.sweep.record_timing = g.timing;
  const SweepRecord r = n_sweep(s.model, s.sweep);
  const auto csv = output_path(s.output, g, ".csv");
  const auto json = output_path(s.output, g, ".json");
  io::write_atomic(csv, io::sweep_csv(r));
  io::write_atomic(json, io::sweep_summary_json(r));
  announce(g, out, csv);
  announce(g, out, json);
  print_fit(r, g, out);
  return kExitOk;
}

int cmd_w2(const std::filesystem::path& a, const std::filesystem::path& b, const W2Options& opts, std::ostream& out) {
  const io::PointCloud pa = io::read_particles_csv(a);
  const io::PointCloud pb = io::read_particles_csv(b);
  if (pa.dim != pb.dim) throw ConfigError(fmt::format("dimension mismatch: {} vs {} columns", pa.dim, pb.dim));
  const std::size_t na = pa.view().count();
  const std::size_t nb = pb.view().count();
  W2Report report;
  if (opts.subsample) {
    report = w2_subsampled(pa.view(), pb.view(), *opts.subsample, opts.reps, opts.seed);
  } else {
    if (na != nb) {
      throw ConfigError(fmt::format("unequal particle counts ({} vs {}); use --subsample", na, nb));
    }
    if (pa.dim == 1) {
      report = w2_sorted_1d(pa.data, pb.data);
    } else if (na <= kAssignmentCap) {
      report = w2_assignment(pa.view(), pb.view());
    } else {
      throw ConfigError(fmt::format("{} points exceed the exact solver cap of {}; use --subsample BATCH", na,
                                    kAssignmentCap));
    }
  }
  out << io::w2_report_json(report);
  return kExitOk;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Particle solver for the granular medium equation"};
  app.name("granular");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GlobalOptions g;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  auto* out_opt = app.add_option("--out-dir", out_dir, "Override output.dir");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (default: $GRANULAR_THREADS or 1)")
                          ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.add_flag("--timing", g.timing, "Record wall-clock times in artifacts");

  bool as_json = false;
  auto* models = app.add_subcommand("models", "List the model catalog");
  models->add_flag("--json", as_json, "Print a JSON array");

  std::string config;
  auto* run_cmd = app.add_subcommand("run", "Run one simulation from a config file");
  run_cmd->add_option("config", config, "Config file")->required();
  auto* tau_cmd = app.add_subcommand("sweep-tau", "Step-size convergence sweep");
  tau_cmd->add_option("config", config, "Config file")->required();
  auto* n_cmd = app.add_subcommand("sweep-n", "Particle-count convergence sweep");
  n_cmd->add_option("config", config, "Config file")->required();

  std::string file_a, file_b;
  W2Options w2_opts;
  std::size_t batch = 0;
  auto* w2_cmd = app.add_subcommand("w2", "W2 distance between two particle CSV files");
  w2_cmd->add_option("a", file_a, "First CSV")->required();
  w2_cmd->add_option("b", file_b, "Second CSV")->required();
  auto* batch_opt = w2_cmd->add_option("--subsample", batch, "Subsample batch size")->check(CLI::PositiveNumber);
  w2_cmd->add_option("--reps", w2_opts.reps, "Subsample replicates")->check(CLI::PositiveNumber);

  for (auto* sub : {models, run_cmd, tau_cmd, n_cmd, w2_cmd}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;
  if (*out_opt) g.out_dir = out_dir;
  if (*threads_opt) g.threads = threads;
  if (*batch_opt) w2_opts.subsample = batch;
  if (g.seed) w2_opts.seed = *g.seed;

  try {
    if (*models) return cmd_models(as_json, out);
    if (*run_cmd) return cmd_run(config, g, out);
    if (*tau_cmd) return cmd_sweep_tau(config, g, out);
    if (*n_cmd) return cmd_sweep_n(config, g, out);
    if (*w2_cmd) return cmd_w2(file_a, file_b, w2_opts, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

}  // namespace granular::cli
