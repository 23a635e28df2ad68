#include "granular/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/core.h>

#include "granular/errors.hpp"

namespace granular::cli {
namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model", {"id", "dim"}},
      {"run",
       {"n_particles", "tau", "n_steps", "t_final", "mode", "perturbation_eps", "seed", "record_every",
        "allow_large_tau", "coupled_ou_reference", "moment_orders"}},
      {"initial", {"preset", "weights", "means", "covariances"}},
      {"prox", {"gamma0", "shrink", "grad_tol", "max_iters", "epsilon_target"}},
      {"output", {"dir", "name", "particles"}},
      {"sweep",
       {"taus", "ns", "n_particles", "t_eval", "replications", "seed", "tau", "reference_n",
        "reference_replications", "reference_tau_ratio", "reference_refinement"}},
  };
  return keys;
}

void check_keys(const Document& doc, const std::set<std::string>& sections) {
  for (const auto& [name, table] : doc) {
    if (!sections.count(name)) {
      throw ConfigError(name.empty() ? "keys must appear inside a [section]"
                                     : fmt::format("unexpected section [{}]", name));
    }
    const auto& keys = allowed_keys().at(name);
    for (const auto& [key, value] : table) {
      if (!keys.count(key)) throw ConfigError(fmt::format("line {}: unknown key '{}' in [{}]", value.line, key, name));
    }
  }
}

const Value* find(const Document& doc, const std::string& section, const std::string& key) {
  const auto s = doc.find(section);
  if (s == doc.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

std::string where(const std::string& section, const std::string& key) { return section + "." + key; }

std::optional<double> get_double(const Document& doc, const std::string& s, const std::string& k) {
  const Value* v = find(doc, s, k);
  if (!v) return std::nullopt;
  return v->as_double(where(s, k));
}

std::optional<std::int64_t> get_int(const Document& doc, const std::string& s, const std::string& k) {
  const Value* v = find(doc, s, k);
  if (!v) return std::nullopt;
  return v->as_int(where(s, k));
}

std::optional<std::string> get_string(const Document& doc, const std::string& s, const std::string& k) {
  const Value* v = find(doc, s, k);
  if (!v) return std::nullopt;
  return v->as_string(where(s, k));
}

std::optional<bool> get_bool(const Document& doc, const std::string& s, const std::string& k) {
  const Value* v = find(doc, s, k);
  if (!v) return std::nullopt;
  return v->as_bool(where(s, k));
}

std::size_t positive_count(std::int64_t v, const std::string& what) {
  if (v < 1) throw ConfigError(fmt::format("{} must be a positive integer", what));
  return static_cast<std::size_t>(v);
}

std::vector<double> number_list(const Value& v, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : v.as_array(what)) out.push_back(item.as_double(what));
  return out;
}

ModelSpec load_model(const Document& doc) {
  const auto id = get_string(doc, "model", "id");
  if (!id) throw ConfigError("missing model.id");
  ModelSpec model;
  try {
    model = find_model(*id);
    if (const auto dim = get_int(doc, "model", "dim")) model = model.with_dim(positive_count(*dim, "model.dim"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return model;
}

GaussianMixture load_initial(const Document& doc, const ModelSpec& model) {
  const auto preset = get_string(doc, "initial", "preset");
  const Value* weights = find(doc, "initial", "weights");
  const Value* means = find(doc, "initial", "means");
  const Value* covs = find(doc, "initial", "covariances");
  const bool inline_given = weights || means || covs;
  if (preset && inline_given) throw ConfigError("initial: give either preset or weights/means/covariances, not both");

  GaussianMixture m;
  try {
    if (preset) {
      if (*preset == "standard-normal") {
        m = GaussianMixture::standard_normal(model.dim);
      } else {
        m = initial_preset(*preset);
      }
    } else if (inline_given) {
      if (!(weights && means && covs)) throw ConfigError("initial: weights, means and covariances go together");
      m.weights = number_list(*weights, "initial.weights");
      const auto& mean_rows = means->as_array("initial.means");
      const auto& cov_rows = covs->as_array("initial.covariances");
      if (mean_rows.size() != m.weights.size() || cov_rows.size() != m.weights.size()) {
        throw ConfigError("initial: weights, means and covariances must have the same length");
      }
      for (std::size_t k = 0; k < m.weights.size(); ++k) {
        const auto mean = number_list(mean_rows[k], "initial.means");
        m.means.push_back(Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())));
        const auto& rows = cov_rows[k].as_array("initial.covariances");
        Eigen::MatrixXd cov(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
          const auto row = number_list(rows[r], "initial.covariances");
          if (row.size() != rows.size()) throw ConfigError("initial: covariance matrices must be square");
          for (std::size_t c = 0; c < row.size(); ++c) {
            cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
          }
        }
        if (cov.rows() != m.means.back().size()) throw ConfigError("initial: covariance and mean sizes differ");
        m.covariances.push_back(cov);
      }
    } else {
      m = model.default_initial();
    }
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
  if (m.dim() != model.dim) {
    throw ConfigError(fmt::format("initial mixture is in R^{} but model {} is in R^{}", m.dim(), model.id, model.dim));
  }
  return m;
}

ProxConfig load_prox(const Document& doc, double tau, double lambda) {
  const auto eps = get_double(doc, "prox", "epsilon_target");
  ProxConfig p = eps ? ProxConfig::from_epsilon(tau, lambda, *eps) : ProxConfig::defaults(tau, lambda);
  if (auto v = get_double(doc, "prox", "gamma0")) p.gamma0 = *v;
  if (auto v = get_double(doc, "prox", "shrink")) p.shrink = *v;
  if (auto v = get_double(doc, "prox", "grad_tol")) p.grad_tol = *v;
  if (auto v = get_int(doc, "prox", "max_iters")) p.max_iters = static_cast<int>(positive_count(*v, "prox.max_iters"));
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("prox: ") + e.what());
  }
  return p;
}

bool has_section(const Document& doc, const std::string& name) { return doc.count(name) > 0; }

OutputSettings load_output(const Document& doc, const std::string& default_name) {
  OutputSettings out;
  out.name = default_name;
  if (auto v = get_string(doc, "output", "dir")) out.dir = *v;
  if (auto v = get_string(doc, "output", "name")) out.name = *v;
  if (out.name.empty() || out.name.find('/') != std::string::npos) throw ConfigError("output.name must be a plain file stem");
  if (auto v = get_string(doc, "output", "particles")) {
    if (*v == "none") {
      out.particles = ParticleDump::none;
    } else if (*v == "final") {
      out.particles = ParticleDump::final;
    } else if (*v == "snapshots") {
      out.particles = ParticleDump::snapshots;
    } else {
      throw ConfigError("output.particles must be \"none\", \"final\" or \"snapshots\"");
    }
  }
  return out;
}

double model_lambda(const ModelSpec& model) {
  return model.local() ? model.confinement().lambda_convex() : model.lift(1).lambda_convex();
}

void check_sweep_variable(const Document& doc, const char* wanted) {
  const bool taus = find(doc, "sweep", "taus") != nullptr;
  const bool ns = find(doc, "sweep", "ns") != nullptr;
  if (taus && ns) throw ConfigError("[sweep] sets both taus and ns; run one sweep per config");
  if (std::string(wanted) == "taus" && ns) throw ConfigError("this is an N-sweep config (sweep.ns); use sweep-n");
  if (std::string(wanted) == "ns" && taus) throw ConfigError("this is a tau-sweep config (sweep.taus); use sweep-tau");
  if (!taus && !ns) throw ConfigError(fmt::format("missing sweep.{}", wanted));
}

}  // namespace

RunSettings load_run_config(const Document& doc) {
  check_keys(doc, {"model", "run", "initial", "prox", "output"});
  RunSettings s;
  s.model = load_model(doc);
  if (auto n = get_int(doc, "run", "n_particles")) s.n_particles = positive_count(*n, "run.n_particles");
  const auto tau = get_double(doc, "run", "tau");
  if (!tau) throw ConfigError("missing run.tau");
  if (!(*tau > 0.0)) throw ConfigError("run.tau must be positive");
  s.scheme.tau = *tau;

  const auto n_steps = get_int(doc, "run", "n_steps");
  const auto t_final = get_double(doc, "run", "t_final");
  if (n_steps.has_value() == t_final.has_value()) throw ConfigError("give exactly one of run.n_steps and run.t_final");
  if (n_steps) {
    if (*n_steps < 0) throw ConfigError("run.n_steps must be nonnegative");
    s.scheme.n_steps = *n_steps;
  } else {
    if (!(*t_final >= 0.0)) throw ConfigError("run.t_final must be nonnegative");
    s.scheme.n_steps = std::llround(*t_final / *tau);
  }

  s.scheme.mode = s.model.local() ? SchemeMode::local : SchemeMode::interacting;
  if (auto mode = get_string(doc, "run", "mode")) {
    try {
      s.scheme.mode = parse_scheme_mode(*mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto eps = get_double(doc, "run", "perturbation_eps")) s.scheme.perturbation_eps = *eps;
  if (auto seed = get_int(doc, "run", "seed")) {
    if (*seed < 0) throw ConfigError("run.seed must be nonnegative");
    s.scheme.seed = static_cast<std::uint64_t>(*seed);
  }
  if (auto v = get_bool(doc, "run", "allow_large_tau")) s.scheme.allow_large_tau = *v;
  if (auto v = get_int(doc, "run", "record_every")) {
    s.options.record_every = static_cast<std::int64_t>(positive_count(*v, "run.record_every"));
  }
  if (auto v = get_bool(doc, "run", "coupled_ou_reference")) s.options.coupled_ou_reference = *v;
  if (const Value* v = find(doc, "run", "moment_orders")) {
    s.options.moment_orders = number_list(*v, "run.moment_orders");
    for (double a : s.options.moment_orders) {
      if (!(a >= 0.0)) throw ConfigError("run.moment_orders must be nonnegative");
    }
  }
  s.scheme.prox = load_prox(doc, s.scheme.tau, model_lambda(s.model));
  s.initial = load_initial(doc, s.model);
  s.output = load_output(doc, "run");
  s.options.keep_positions = s.output.particles == ParticleDump::snapshots;
  return s;
}

TauSweepSettings load_tau_sweep_config(const Document& doc) {
  check_keys(doc, {"model", "initial", "prox", "output", "sweep"});
  check_sweep_variable(doc, "taus");
  TauSweepSettings s;
  s.model = load_model(doc);
  auto& c = s.sweep;
  c.taus = number_list(*find(doc, "sweep", "taus"), "sweep.taus");
  if (c.taus.empty()) throw ConfigError("sweep.taus is empty");
  if (find(doc, "sweep", "ns") || find(doc, "sweep", "tau") || find(doc, "sweep", "reference_n") ||
      find(doc, "sweep", "reference_replications") || find(doc, "sweep", "reference_tau_ratio")) {
    throw ConfigError("sweep: N-sweep keys are not valid in a tau sweep");
  }
  if (auto v = get_int(doc, "sweep", "n_particles")) c.n_particles = positive_count(*v, "sweep.n_particles");
  if (auto v = get_double(doc, "sweep", "t_eval")) c.t_eval = *v;
  if (auto v = get_int(doc, "sweep", "replications")) {
    c.replications = static_cast<int>(positive_count(*v, "sweep.replications"));
  }
  if (auto v = get_int(doc, "sweep", "seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get_int(doc, "sweep", "reference_refinement")) {
    c.reference_refinement = static_cast<int>(positive_count(*v, "sweep.reference_refinement"));
  }
  if (has_section(doc, "prox")) {
    const double smallest = *std::min_element(c.taus.begin(), c.taus.end());
    c.prox = load_prox(doc, smallest, model_lambda(s.model));
  }
  if (has_section(doc, "initial")) c.initial = load_initial(doc, s.model);
  s.output = load_output(doc, "sweep_tau");
  return s;
}

NSweepSettings load_n_sweep_config(const Document& doc) {
  check_keys(doc, {"model", "initial", "prox", "output", "sweep"});
  check_sweep_variable(doc, "ns");
  NSweepSettings s;
  s.model = load_model(doc);
  auto& c = s.sweep;
  for (const auto& item : find(doc, "sweep", "ns")->as_array("sweep.ns")) {
    c.ns.push_back(positive_count(item.as_int("sweep.ns"), "sweep.ns"));
  }
  if (c.ns.empty()) throw ConfigError("sweep.ns is empty");
  if (find(doc, "sweep", "n_particles") || find(doc, "sweep", "reference_refinement")) {
    throw ConfigError("sweep: tau-sweep keys are not valid in an N sweep");
  }
  if (auto v = get_double(doc, "sweep", "tau")) c.tau = *v;
  if (auto v = get_double(doc, "sweep", "t_eval")) c.t_eval = *v;
  if (auto v = get_int(doc, "sweep", "replications")) {
    c.replications = static_cast<int>(positive_count(*v, "sweep.replications"));
  }
  if (auto v = get_int(doc, "sweep", "seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get_int(doc, "sweep", "reference_n")) c.reference_n = positive_count(*v, "sweep.reference_n");
  if (auto v = get_int(doc, "sweep", "reference_replications")) {
    c.reference_replications = static_cast<int>(positive_count(*v, "sweep.reference_replications"));
  }
  if (auto v = get_double(doc, "sweep", "reference_tau_ratio")) c.reference_tau_ratio = *v;
  if (has_section(doc, "prox")) c.prox = load_prox(doc, c.tau, model_lambda(s.model));
  if (has_section(doc, "initial")) c.initial = load_initial(doc, s.model);
  s.output = load_output(doc, "sweep_n");
  return s;
}

}  // namespace granular::cli
