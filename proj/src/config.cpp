#include "langevin/config.hpp"

#include "langevin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

namespace langevin {

namespace {

constexpr double kPi = 3.14159265358979323846;

Array to_array(const json& v) {
  if (!v.is_array()) throw config_error("config: expected an array of numbers");
  Array a(v.size());
  for (size_t i = 0; i < v.size(); ++i) a[static_cast<long>(i)] = v[i].get<double>();
  return a;
}

double req_num(const json& j, const char* key) {
  if (!j.contains(key))
    throw config_error(std::string("config: missing field '") + key + "'");
  return j.at(key).get<double>();
}

// 2-D eigenvalue family flattened to one index. Observed modes
// (j,k <= m_observed) come first so that the forward operator annihilates a
// suffix of the basis; each block is sorted by descending eigenvalue with a
// lexicographic tie-break.
struct Flat2d {
  Array prior_vars;
  std::vector<Mode2d> index;
  int n_observed = 0;
};

Flat2d flatten_2d(int m, int m_observed,
                  const std::function<double(int, int)>& eigenvalue,
                  const std::function<double(int, int)>& zeta) {
  struct Entry {
    double mu;
    Mode2d id;
    bool observed;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<size_t>(m) * m);
  for (int j = 1; j <= m; ++j)
    for (int k = 1; k <= m; ++k)
      entries.push_back({eigenvalue(j, k), {j, k, zeta(j, k)},
                         j <= m_observed && k <= m_observed});
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.observed != b.observed) return a.observed;
    if (a.mu != b.mu) return a.mu > b.mu;
    if (a.id.j != b.id.j) return a.id.j < b.id.j;
    return a.id.k < b.id.k;
  });
  Flat2d out;
  out.prior_vars.resize(static_cast<long>(entries.size()));
  out.index.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    out.prior_vars[static_cast<long>(i)] = entries[i].mu;
    out.index.push_back(entries[i].id);
    if (entries[i].observed) out.n_observed++;
  }
  return out;
}

std::optional<PotentialSpec> parse_potential(const json& p) {
  if (p.is_null()) return std::nullopt;
  const std::string family = p.at("family").get<std::string>();
  std::optional<PotentialSpec> out;
  if (family == "quartic") {
    out = PotentialSpec::quartic(p.value("scale", 1.0));
  } else if (family == "quadratic") {
    out = PotentialSpec::quadratic(req_num(p, "curvature"));
  } else if (family == "linear") {
    out = PotentialSpec::linear(req_num(p, "slope"));
  } else if (family == "abs_cubed") {
    out = PotentialSpec::abs_cubed(p.value("scale", 1.0));
  } else {
    throw config_error("config: unknown potential family '" + family + "'");
  }
  return out;
}

ErrorFamily parse_error_family(const std::string& name) {
  if (name == "zero") return ErrorFamily::zero;
  if (name == "constant") return ErrorFamily::constant;
  if (name == "linear_tau") return ErrorFamily::linear_tau;
  if (name == "literal") return ErrorFamily::literal;
  throw config_error("config: unknown error family '" + name + "'");
}

std::pair<ErrorFamily, Array> parse_error_side(const json& side) {
  if (side.is_null()) return {ErrorFamily::zero, Array::Zero(1)};
  const ErrorFamily fam = parse_error_family(side.at("family").get<std::string>());
  if (fam == ErrorFamily::zero) return {fam, Array::Zero(1)};
  if (side.contains("values")) return {fam, to_array(side.at("values"))};
  if (side.contains("value")) return {fam, Array::Constant(1, side.at("value").get<double>())};
  throw config_error("config: error family needs 'value' or 'values'");
}

}  // namespace

ModeSpectrum parse_problem(const json& problem,
                           std::optional<PotentialSpec>* potential_out) {
  const int n_modes = static_cast<int>(req_num(problem, "n_modes"));
  const int n_observed = static_cast<int>(req_num(problem, "n_observed"));
  const double noise_std = req_num(problem, "noise_std");
  const json& prior = problem.at("prior");
  const std::string prior_family = prior.at("family").get<std::string>();

  Array mu;
  std::vector<Mode2d> index2d;
  int implied_observed = -1;

  if (prior_family == "literal") {
    mu = to_array(prior.at("values"));
  } else if (prior_family == "power_law") {
    const double decay = req_num(prior, "decay");
    const double amplitude = prior.value("amplitude", 1.0);
    mu.resize(n_modes);
    for (int j = 0; j < n_modes; ++j)
      mu[j] = amplitude * std::pow(static_cast<double>(j + 1), -decay);
  } else if (prior_family == "exp_laplacian" ||
             prior_family == "brownian_sheet_kl") {
    const int m = static_cast<int>(req_num(prior, "m"));
    int m_obs = m;
    if (problem.at("forward").contains("m_observed"))
      m_obs = problem.at("forward").at("m_observed").get<int>();
    Flat2d flat;
    if (prior_family == "exp_laplacian") {
      const double beta = req_num(prior, "beta");
      auto zeta = [](int j, int k) { return kPi * kPi * (j * j + k * k); };
      flat = flatten_2d(m, m_obs,
                        [&](int j, int k) { return std::exp(-beta * zeta(j, k)); },
                        zeta);
    } else {
      flat = flatten_2d(
          m, m_obs,
          [&](int j, int k) {
            const double f = (j - 0.5) * kPi * (k - 0.5) * kPi;
            return 1.0 / (f * f);
          },
          [](int, int) { return 0.0; });
    }
    mu = flat.prior_vars;
    index2d = std::move(flat.index);
    implied_observed = flat.n_observed;
  } else {
    throw config_error("config: unknown prior family '" + prior_family + "'");
  }

  if (mu.size() != n_modes)
    throw config_error("config: prior does not produce n_modes eigenvalues");
  if (implied_observed >= 0 && implied_observed != n_observed)
    throw config_error("config: n_observed does not match the observed block size");

  const json& forward = problem.at("forward");
  const std::string forward_family = forward.at("family").get<std::string>();
  Array a;
  if (forward_family == "literal") {
    a = to_array(forward.at("values"));
    if (a.size() != n_observed)
      throw config_error("config: forward literal length must equal n_observed");
  } else if (forward_family == "identity_proj") {
    a = Array::Ones(n_observed);
  } else if (forward_family == "heat_semigroup") {
    const double time = req_num(forward, "time");
    if (index2d.empty())
      throw config_error("config: heat_semigroup needs a 2-D Laplacian prior");
    a.resize(n_observed);
    for (int j = 0; j < n_observed; ++j) a[j] = std::exp(-index2d[j].zeta * time);
  } else {
    throw config_error("config: unknown forward family '" + forward_family + "'");
  }

  if (potential_out)
    *potential_out = parse_potential(problem.value("potential", json()));
  return ModeSpectrum(std::move(mu), std::move(a), noise_std, std::move(index2d));
}

ScoreError parse_score_error(const json& error_block, ErrorConvention* conv_out) {
  if (conv_out) *conv_out = ErrorConvention::gaussian;
  if (error_block.is_null()) return ScoreError::zero();
  auto [fa, ca] = parse_error_side(error_block.value("eps_a", json()));
  auto [fb, cb] = parse_error_side(error_block.value("eps_b", json()));
  if (conv_out && error_block.contains("convention")) {
    const std::string c = error_block.at("convention").get<std::string>();
    if (c == "gaussian") *conv_out = ErrorConvention::gaussian;
    else if (c == "potential_aware") *conv_out = ErrorConvention::potential_aware;
    else throw config_error("config: unknown error convention '" + c + "'");
  }
  return ScoreError::make(fa, std::move(ca), fb, std::move(cb));
}

SamplerConfig parse_sampler(const json& s) {
  SamplerConfig c;
  c.step_size = req_num(s, "step_size");
  c.n_steps = static_cast<long>(req_num(s, "n_steps"));
  c.n_chains = s.value("n_chains", 1);
  c.burn_in = static_cast<long>(s.value("burn_in", 0.0));
  c.thin = static_cast<long>(s.value("thin", 1.0));
  c.seed = s.value("seed", 0ull);
  if (s.contains("init")) {
    const json& init = s.at("init");
    if (init.is_array()) {
      c.init = InitKind::literal;
      c.init_values = to_array(init);
    } else {
      const std::string name = init.get<std::string>();
      if (name == "zero") c.init = InitKind::zero;
      else if (name == "prior_draw") c.init = InitKind::prior_draw;
      else throw config_error("config: unknown init '" + name + "'");
    }
  }
  if (s.contains("integrator")) {
    const std::string name = s.at("integrator").get<std::string>();
    if (name == "euler") c.integrator = Integrator::euler;
    else if (name == "exact_ou") c.integrator = Integrator::exact_ou;
    else throw config_error("config: unknown integrator '" + name + "'");
  }
  c.validate();
  return c;
}

PrecondFamily parse_precond_family(const std::string& name) {
  if (name == "identity") return PrecondFamily::identity;
  if (name == "prior") return PrecondFamily::prior;
  if (name == "posterior_form") return PrecondFamily::posterior_form;
  if (name == "optimal_corrected") return PrecondFamily::optimal_corrected;
  if (name == "literal") return PrecondFamily::literal;
  throw config_error("config: unknown preconditioner family '" + name + "'");
}

namespace {

// Builtin parameterizations. brownian_sheet and heat_equation follow the
// two illustration setups; toy_fig1 follows the introductory example
// (A_jj = e^{-0.1 j}, sigma = 0.05, J = 100, identity or 1/j^2 prior).
json builtin_brownian(int m_observed) {
  json c;
  c["experiment"] = "brownian_sheet";
  c["problem"] = {
      {"n_modes", 200 * 200},
      {"n_observed", m_observed * m_observed},
      {"prior", {{"family", "brownian_sheet_kl"}, {"m", 200}}},
      {"forward", {{"family", "identity_proj"}, {"m_observed", m_observed}}},
      {"noise_std", 0.01}};
  c["score"] = {{"tau", 1e-8},
                {"error",
                 {{"eps_a", {{"family", "zero"}}},
                  {"eps_b", {{"family", "zero"}}},
                  {"convention", "gaussian"}}}};
  c["precond"] = {{"family", "posterior_form"}};
  c["sampler"] = {{"step_size", 0.5}, {"n_steps", 5000}, {"n_chains", 2},
                  {"burn_in", 200},   {"thin", 20},      {"seed", 20240801},
                  {"init", "prior_draw"}};
  c["outputs"] = "out/brownian_sheet";
  return c;
}

json heat_eps_a_values(std::uint64_t seed, int n_modes) {
  // Relative score-error slopes eps_a_j ~ N(0, 0.1^2), drawn from a named
  // stream so the resolved config carries the literal values.
  json values = json::array();
  for (int j = 0; j < n_modes; ++j)
    values.push_back(0.1 * rng::normal(seed, rng::kScratchStream, 7000 + j));
  return values;
}

json builtin_heat(bool vanilla, double tau) {
  json c;
  c["experiment"] = "heat_equation";
  const int m = 15;
  c["problem"] = {
      {"n_modes", m * m},
      {"n_observed", m * m},
      {"prior", {{"family", "exp_laplacian"}, {"m", m}, {"beta", 0.1}}},
      {"forward", {{"family", "heat_semigroup"}, {"time", 0.1}}},
      {"noise_std", 0.005}};
  c["score"] = {{"tau", tau},
                {"error",
                 {{"eps_a",
                   {{"family", "linear_tau"},
                    {"values", heat_eps_a_values(901, m * m)}}},
                  {"eps_b", {{"family", "zero"}}},
                  {"convention", "gaussian"}}}};
  if (vanilla) {
    c["precond"] = {{"family", "prior"}};
    c["sampler"] = {{"step_size", 1e-6}, {"n_steps", 15000}, {"n_chains", 1},
                    {"burn_in", 0},      {"thin", 1},        {"seed", 20240802},
                    {"init", "prior_draw"}};
  } else {
    c["precond"] = {{"family", "optimal_corrected"}};
    c["sampler"] = {{"step_size", 1e-2}, {"n_steps", 5000}, {"n_chains", 1},
                    {"burn_in", 500},    {"thin", 1},       {"seed", 20240802},
                    {"init", "prior_draw"}};
  }
  c["outputs"] = vanilla ? "out/heat_equation_vanilla" : "out/heat_equation";
  return c;
}

json builtin_toy(bool identity_prior) {
  json c;
  c["experiment"] = "toy_fig1";
  json forward_values = json::array();
  for (int j = 1; j <= 100; ++j) forward_values.push_back(std::exp(-0.1 * j));
  json prior = identity_prior
                   ? json{{"family", "power_law"}, {"decay", 0.0}}
                   : json{{"family", "power_law"}, {"decay", 2.0}};
  c["problem"] = {{"n_modes", 100},
                  {"n_observed", 100},
                  {"prior", prior},
                  {"forward", {{"family", "literal"}, {"values", forward_values}}},
                  {"noise_std", 0.05}};
  // The vanilla C = I sampler of the introductory figure. tau defaults to
  // 1e-5 so the drift of the fine modes actually reaches its ~lambda/mu
  // divergence scale within the truncation (at tau = 1e-3 the score rate
  // saturates at 1/tau = 1000 before mode 100).
  c["score"] = {{"tau", 1e-5},
                {"error",
                 {{"eps_a", {{"family", "zero"}}},
                  {"eps_b", {{"family", "zero"}}},
                  {"convention", "gaussian"}}}};
  c["precond"] = {{"family", "identity"}};
  c["sampler"] = {{"step_size", 1e-3}, {"n_steps", 20000}, {"n_chains", 4},
                  {"burn_in", 2000},   {"thin", 2},        {"seed", 20240803},
                  {"init", "prior_draw"}};
  c["outputs"] = identity_prior ? "out/toy_fig1_identity" : "out/toy_fig1";
  return c;
}

void merge_overrides(json& base, const json& user) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (it.key() == "experiment" || it.key() == "variant") continue;
    if (base.contains(it.key()) && base.at(it.key()).is_object() &&
        it.value().is_object()) {
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt)
        base[it.key()][jt.key()] = jt.value();
    } else {
      base[it.key()] = it.value();
    }
  }
}

}  // namespace

json expand_builtin(const json& user) {
  const std::string tag = user.value("experiment", "custom");
  const std::string variant = user.value("variant", "");
  json base;
  if (tag == "custom") {
    base = user;
    base["experiment"] = "custom";
    return base;
  }
  if (tag == "brownian_sheet") {
    int m_obs = 75;
    if (user.contains("forward_m_observed"))
      m_obs = user.at("forward_m_observed").get<int>();
    if (user.contains("problem") && user.at("problem").contains("forward") &&
        user.at("problem").at("forward").contains("m_observed"))
      m_obs = user.at("problem").at("forward").at("m_observed").get<int>();
    base = builtin_brownian(m_obs);
  } else if (tag == "heat_equation") {
    double tau = 1e-3;
    if (user.contains("score") && user.at("score").contains("tau"))
      tau = user.at("score").at("tau").get<double>();
    base = builtin_heat(variant == "vanilla", tau);
  } else if (tag == "toy_fig1") {
    base = builtin_toy(variant == "identity");
  } else {
    throw config_error("config: unknown experiment tag '" + tag + "'");
  }
  merge_overrides(base, user);
  return base;
}

ExperimentConfig load_experiment(const json& user) {
  ExperimentConfig cfg;
  cfg.resolved = expand_builtin(user);
  cfg.experiment = cfg.resolved.value("experiment", "custom");
  cfg.outputs = cfg.resolved.value("outputs", "out");

  std::optional<PotentialSpec> pot;
  cfg.spec = parse_problem(cfg.resolved.at("problem"), &pot);
  cfg.potential = std::move(pot);

  const json& score = cfg.resolved.at("score");
  cfg.tau = req_num(score, "tau");
  cfg.error = parse_score_error(score.value("error", json()), &cfg.convention);
  if (cfg.potential) cfg.convention = ErrorConvention::potential_aware;

  const json& precond = cfg.resolved.at("precond");
  cfg.precond_family = parse_precond_family(precond.at("family").get<std::string>());
  if (cfg.precond_family == PrecondFamily::literal)
    cfg.precond_literal = to_array(precond.at("values"));

  cfg.sampler = parse_sampler(cfg.resolved.at("sampler"));
  return cfg;
}

ExperimentConfig load_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw config_error("config: JSON parse error in '" + path + "': " + e.what());
  }
  // Accept a manifest (the resolved config lives under "config").
  if (j.contains("config") && j.at("config").is_object() &&
      j.at("config").contains("problem"))
    j = j.at("config");
  return load_experiment(j);
}

GroundTruth synthesize_truth(const ModeSpectrum& spec, std::uint64_t seed) {
  GroundTruth t;
  const int J = spec.n_modes();
  t.coefficients.resize(J);
  for (int j = 0; j < J; ++j)
    t.coefficients[j] =
        std::sqrt(spec.prior_var(j)) * rng::normal(seed, rng::kTruthStream, j);
  Array y(spec.n_observed());
  for (int j = 0; j < spec.n_observed(); ++j)
    y[j] = spec.forward_diag()[j] * t.coefficients[j] +
           spec.noise_std() * rng::normal(seed, rng::kNoiseStream, j);
  t.y = Observation{std::move(y)};
  return t;
}

}  // namespace langevin
