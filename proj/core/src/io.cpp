#include "granular/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "granular/errors.hpp"
#include "granular/models.hpp"

namespace granular::io {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json potential_json(const Potential& p) {
  json j{{"id", p.id()}, {"dim", p.dim()}, {"lambda_convex", p.lambda_convex()}, {"growth_q", p.growth_q()}};
  j["exact_prox"] = p.has_exact_prox();
  if (p.info().minimizer) j["minimizer"] = *p.info().minimizer;
  return j;
}

json mixture_json(const GaussianMixture& m) {
  json components = json::array();
  for (std::size_t k = 0; k < m.size(); ++k) {
    std::vector<double> mean(m.means[k].data(), m.means[k].data() + m.means[k].size());
    json cov = json::array();
    for (Eigen::Index r = 0; r < m.covariances[k].rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < m.covariances[k].cols(); ++c) row.push_back(m.covariances[k](r, c));
      cov.push_back(row);
    }
    components.push_back({{"weight", m.weights[k]}, {"mean", mean}, {"covariance", cov}});
  }
  return components;
}

json model_json(const ModelSpec& m) {
  json j{{"id", std::string(1, m.id)}, {"description", m.describe()}, {"kind", m.kind}, {"dim", m.dim}};
  j["confinement"] = potential_json(m.confinement());
  j["interaction"] = m.w_id ? potential_json(m.interaction()) : json(nullptr);
  const JointPotential psi = m.lift(1);
  j["lambda_psi"] = psi.lambda_convex();
  j["growth_q_psi"] = psi.growth_q();
  j["initial_preset"] = m.initial_preset;
  j["initial"] = mixture_json(m.default_initial());
  return j;
}

json prox_json(const ProxConfig& p) {
  return {{"gamma0", p.gamma0},
          {"shrink", p.shrink},
          {"grad_tol", p.grad_tol},
          {"max_iters", p.max_iters},
          {"epsilon_target", p.epsilon_target}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string run_record_json(const RunRecord& r) {
  json j;
  j["model"] = model_json(r.model);
  const SchemeConfig& c = r.config;
  j["config"] = {{"tau", c.tau},
                 {"n_steps", c.n_steps},
                 {"t_final", c.tau * static_cast<double>(c.n_steps)},
                 {"mode", std::string(to_string(c.mode))},
                 {"perturbation_eps", c.perturbation_eps},
                 {"seed", c.seed},
                 {"allow_large_tau", c.allow_large_tau},
                 {"noise_substeps", c.noise_substeps},
                 {"prox", prox_json(c.prox)}};
  j["n_particles"] = r.n_particles;
  j["dim"] = r.final_state.dim;
  j["wall_ms"] = r.wall_ms;
  json snaps = json::array();
  for (const auto& s : r.snapshots) {
    json moments = json::array();
    for (const auto& [order, value] : s.moments) moments.push_back({{"order", order}, {"value", value}});
    json sj{{"step", s.step}, {"time", s.time}, {"mean", s.mean}, {"variance", s.variance}, {"moments", moments}};
    if (s.w2_reference) sj["w2_reference"] = *s.w2_reference;
    snaps.push_back(std::move(sj));
  }
  j["snapshots"] = std::move(snaps);
  return dump(j);
}

std::string sweep_csv(const SweepRecord& r) {
  std::string out = "sweep_value,replication,w2,w2_squared,seed,wall_ms\n";
  for (const auto& p : r.points) {
    out += fmt::format("{},{},{},{},{},{}\n", format_double(p.value), p.replication, format_double(p.w2),
                       format_double(p.w2_squared), p.seed, format_double(p.wall_ms));
  }
  return out;
}

std::string sweep_summary_json(const SweepRecord& r) {
  json j;
  j["sweep_variable"] = r.variable == SweepVariable::tau ? "tau" : "n_particles";
  j["model"] = std::string(1, r.model);
  j["fitted_quantity"] = r.fitted_quantity;
  j["slope"] = r.fit ? json(r.fit->slope) : json(nullptr);
  j["intercept"] = r.fit ? json(r.fit->intercept) : json(nullptr);
  j["reference"] = r.reference;
  j["t_eval"] = r.t_eval;
  json rows = json::array();
  for (const auto& s : r.summary) {
    rows.push_back({{"value", s.value}, {"mean", s.mean_metric}, {"std_error", optional_number(s.std_error)},
                    {"steps", s.steps}});
  }
  j["summary"] = std::move(rows);
  j["notes"] = r.notes;
  return dump(j);
}

std::string particles_csv(std::span<const double> positions, std::size_t dim) {
  if (dim == 0 || positions.size() % dim != 0) throw std::invalid_argument("particles_csv: bad shape");
  std::string out;
  for (std::size_t c = 0; c < dim; ++c) out += fmt::format("{}x{}", c == 0 ? "" : ",", c);
  out += '\n';
  for (std::size_t i = 0; i < positions.size(); i += dim) {
    for (std::size_t c = 0; c < dim; ++c) {
      if (c > 0) out += ',';
      out += format_double(positions[i + c]);
    }
    out += '\n';
  }
  return out;
}

PointCloud read_particles_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line.front() == 'x') {
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view cell(line.data() + pos, (comma == std::string::npos ? line.size() : comma) - pos);
      std::size_t b = 0, e = cell.size();
      while (b < e && cell[b] == ' ') ++b;
      while (e > b && cell[e - 1] == ' ') --e;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, v);
      if (ec != std::errc() || ptr != cell.data() + e) {
        throw ConfigError(fmt::format("{}:{}: cannot parse '{}'", path.string(), line_no, cell));
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cloud.dim == 0) cloud.dim = row.size();
    if (row.size() != cloud.dim) {
      throw ConfigError(fmt::format("{}:{}: expected {} columns, found {}", path.string(), line_no, cloud.dim,
                                    row.size()));
    }
    cloud.data.insert(cloud.data.end(), row.begin(), row.end());
  }
  if (cloud.data.empty()) throw ConfigError(path.string() + ": no particles");
  return cloud;
}

std::string w2_report_json(const W2Report& r) {
  json j{{"distance", r.distance}, {"squared", r.squared}, {"method", std::string(to_string(r.method))},
         {"n_used", r.n_used}};
  j["std_error"] = optional_number(r.std_error);
  return dump(j);
}

std::string models_json() {
  json all = json::array();
  for (const auto& m : model_catalog()) all.push_back(model_json(m));
  return dump(all);
}

std::string models_table() {
  std::string out = fmt::format("{:<6}{:<34}{:<5}{:>10}{:>10}{:>10}  {}\n", "model", "potentials", "dim", "lambda_V",
                                "lambda_W", "q", "initial");
  for (const auto& m : model_catalog()) {
    const Potential v = m.confinement();
    const JointPotential psi = m.lift(1);
    const std::string lw = m.w_id ? fmt::format("{:g}", m.interaction().lambda_convex()) : "-";
    out += fmt::format("{:<6}{:<34}{:<5}{:>10g}{:>10}{:>10.4g}  {}\n", m.id, m.describe(), m.dim, v.lambda_convex(),
                       lw, psi.growth_q(), m.initial_preset);
  }
  return out;
}

}  // namespace granular::io
