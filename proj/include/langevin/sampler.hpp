#pragma once

#include "langevin/rng.hpp"
#include "langevin/score.hpp"
#include "langevin/spectral_model.hpp"
#include "langevin/types.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <thread>
#include <vector>

namespace langevin {

// Euler-Maruyama integration of the preconditioned Langevin SDE
//   dX = S_theta(X, tau; mu) dt + C grad log rho(y - A X) dt + sqrt(2C) dW
// mode by mode. An exact-OU integrator is available for the Gaussian-score
// case to isolate discretization bias from the continuous-time law.
enum class InitKind { zero, prior_draw, literal };
enum class Integrator { euler, exact_ou };

struct SamplerConfig {
  double step_size = 1e-3;
  long n_steps = 1000;
  int n_chains = 1;
  long burn_in = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  InitKind init = InitKind::prior_draw;
  Array init_values;
  Integrator integrator = Integrator::euler;

  void validate() const {
    if (!(step_size > 0.0)) throw config_error("SamplerConfig: step_size must be > 0");
    if (n_steps < 1) throw config_error("SamplerConfig: n_steps must be >= 1");
    if (n_chains < 1) throw config_error("SamplerConfig: n_chains must be >= 1");
    if (burn_in < 0 || burn_in >= n_steps)
      throw config_error("SamplerConfig: need 0 <= burn_in < n_steps");
    if (thin < 1) throw config_error("SamplerConfig: thin must be >= 1");
  }
};

struct Divergence {
  int chain = 0;
  long step = 0;
  int mode = 0;
  double value = 0.0;
};

struct StabilityWarning {
  bool triggered = false;
  int worst_mode = 0;
  double max_factor = 0.0;  // max_j h * (s_j + eps_a_j + lambda_j sigma^{-2} A_jj^2)
};

class ChainEnsemble {
 public:
  ChainEnsemble(SamplerConfig config, int n_modes)
      : config_(std::move(config)), n_modes_(n_modes) {
    kept_.resize(config_.n_chains);
    acc_mean_.assign(config_.n_chains, Array::Zero(n_modes));
    acc_m2_.assign(config_.n_chains, Array::Zero(n_modes));
    acc_count_.assign(config_.n_chains, 0);
    streams_.resize(config_.n_chains);
    for (int c = 0; c < config_.n_chains; ++c)
      streams_[c] = rng::chain_stream(c);
  }

  const SamplerConfig& config() const { return config_; }
  int n_modes() const { return n_modes_; }
  int n_chains() const { return config_.n_chains; }
  long n_kept(int chain) const { return kept_[chain].rows(); }
  // kept samples: rows = kept steps, cols = modes
  const Eigen::MatrixXd& kept(int chain) const { return kept_[chain]; }
  std::uint64_t stream_id(int chain) const { return streams_[chain]; }

  // Running post-burn-in moments over every step (not thinned).
  const Array& chain_mean(int chain) const { return acc_mean_[chain]; }
  Array chain_var(int chain) const {
    if (acc_count_[chain] < 2) return Array::Zero(n_modes_);
    return acc_m2_[chain] / static_cast<double>(acc_count_[chain] - 1);
  }
  long chain_count(int chain) const { return acc_count_[chain]; }

  Array pooled_mean() const {
    Array m = Array::Zero(n_modes_);
    double total = 0.0;
    for (int c = 0; c < n_chains(); ++c) {
      m += acc_mean_[c] * static_cast<double>(acc_count_[c]);
      total += static_cast<double>(acc_count_[c]);
    }
    return total > 0 ? Array(m / total) : m;
  }
  // Pooled variance about the pooled mean (Chan et al. merge of Welford
  // accumulators).
  Array pooled_var() const {
    const Array gm = pooled_mean();
    Array m2 = Array::Zero(n_modes_);
    double total = 0.0;
    for (int c = 0; c < n_chains(); ++c) {
      const double n = static_cast<double>(acc_count_[c]);
      if (n == 0) continue;
      m2 += acc_m2_[c] + n * (acc_mean_[c] - gm).square();
      total += n;
    }
    return total > 1 ? Array(m2 / (total - 1.0)) : m2;
  }

  const std::optional<Divergence>& divergence() const { return divergence_; }
  const StabilityWarning& warning() const { return warning_; }

  // internal filling hooks used by run()
  Eigen::MatrixXd& mutable_kept(int chain) { return kept_[chain]; }
  void accumulate(int chain, const Array& x) {
    acc_count_[chain] += 1;
    const double n = static_cast<double>(acc_count_[chain]);
    const Array delta = x - acc_mean_[chain];
    acc_mean_[chain] += delta / n;
    acc_m2_[chain] += delta * (x - acc_mean_[chain]);
  }
  void set_divergence(const Divergence& d) {
    if (!divergence_ || d.chain < divergence_->chain ||
        (d.chain == divergence_->chain && d.step < divergence_->step))
      divergence_ = d;
  }
  void set_warning(const StabilityWarning& w) { warning_ = w; }

 private:
  SamplerConfig config_;
  int n_modes_;
  std::vector<Eigen::MatrixXd> kept_;
  std::vector<Array> acc_mean_, acc_m2_;
  std::vector<long> acc_count_;
  std::vector<std::uint64_t> streams_;
  std::optional<Divergence> divergence_;
  StabilityWarning warning_;
};

// Full drift: perturbed score plus preconditioned likelihood gradient,
//   component j = S_theta,j(x) + lambda_j sigma^{-2} A_jj (y_j - A_jj x_j).
inline Array drift(const ScoreModel& model, const Observation& y,
                   const Array& x) {
  return model.perturbed_score(x) +
         model.precond_vars() * likelihood_grad(model.spec(), y, x);
}

// One Euler-Maruyama step: x' = x + h drift + sqrt(2 lambda h) noise.
inline Array step(const Array& x, const ScoreModel& model,
                  const Observation& y, double h, const Array& noise) {
  return x + h * drift(model, y, x) +
         (2.0 * h * model.precond_vars()).sqrt() * noise;
}

namespace detail {

// Linearized per-mode drift rates; the explicit-Euler stability factor is
// h * kappa_j, warned at >= 2 (never clamped -- instability must reproduce).
inline Array linear_rates(const ScoreModel& model) {
  const Array s = model.score_rates();
  const Array ea = model.error().eps_a(model.tau(), model.spec().n_modes());
  const double is2 = 1.0 / model.spec().noise_var();
  Array rate = s + ea;
  for (int j = 0; j < model.spec().n_observed(); ++j) {
    const double a = model.spec().forward_diag()[j];
    rate[j] += model.precond_vars()[j] * is2 * a * a;
  }
  return rate;
}

inline Array initial_state(const ScoreModel& model, const SamplerConfig& cfg,
                           int chain) {
  const int J = model.spec().n_modes();
  switch (cfg.init) {
    case InitKind::zero:
      return Array::Zero(J);
    case InitKind::literal:
      if (cfg.init_values.size() != J)
        throw config_error("SamplerConfig: literal init length mismatch");
      return cfg.init_values;
    case InitKind::prior_draw: {
      Array x(J);
      for (int j = 0; j < J; ++j)
        x[j] = std::sqrt(model.spec().prior_var(j)) *
               rng::normal(cfg.seed, rng::kInitStream + chain, j);
      return x;
    }
  }
  throw config_error("SamplerConfig: unknown init kind");
}

}  // namespace detail

// Advance K independent chains for n_steps; kept samples after burn_in,
// thinned. Deterministic for a given (config, seed) under any number of
// worker threads: noise is drawn per (chain, step, mode) counter. On
// divergence (|x| > 1e8 or non-finite) the chain stops and the partial
// ensemble is returned with the flag set.
inline ChainEnsemble run(const ScoreModel& model, const Observation& y,
                         const SamplerConfig& config) {
  config.validate();
  const int J = model.spec().n_modes();
  if (y.values.size() != model.spec().n_observed())
    throw config_error("run: observation length mismatch");
  if (config.integrator == Integrator::exact_ou && model.has_potential())
    throw contract_error("run: exact OU integrator requires a Gaussian score");
  if (model.has_potential() && !model.tabulated())
    model.tabulate_potential_score();

  ChainEnsemble ens(config, J);

  {
    StabilityWarning w;
    const Array rate = detail::linear_rates(model);
    int worst = 0;
    const double f = config.step_size * rate.maxCoeff(&worst);
    w.max_factor = f;
    w.worst_mode = worst;
    w.triggered = f >= 2.0 && config.integrator == Integrator::euler;
    ens.set_warning(w);
    if (w.triggered)
      std::fprintf(stderr,
                   "langevin::run: explicit-Euler stability factor h*kappa = "
                   "%.3g >= 2 at mode %d; not clamping\n",
                   w.max_factor, w.worst_mode);
  }

  const long kept_rows = (config.n_steps - config.burn_in + config.thin - 1) / config.thin;
  const double h = config.step_size;

  // exact-OU coefficients (Gaussian case): rate kappa_j and stationary mean.
  Array ou_rate, ou_mean, ou_decay, ou_noise_sd;
  if (config.integrator == Integrator::exact_ou) {
    ou_rate = detail::linear_rates(model);
    Array b = -model.error().eps_b(model.tau(), J);
    const double is2 = 1.0 / model.spec().noise_var();
    for (int j = 0; j < model.spec().n_observed(); ++j)
      b[j] += model.precond_vars()[j] * is2 * model.spec().forward_diag()[j] *
              y.values[j];
    ou_mean = b / ou_rate;
    ou_decay = (-h * ou_rate).exp();
    ou_noise_sd =
        (model.precond_vars() / ou_rate * (1.0 - ou_decay.square())).sqrt();
  }

  std::vector<std::optional<Divergence>> divs(config.n_chains);

  // Precomputed Euler coefficients: the linear part of the drift is
  // -(s_j + eps_a_j + lambda_j sigma^{-2} A_jj^2) x_j plus the constant
  // lambda_j sigma^{-2} A_jj y_j - eps_b_j; the potential part stays
  // per-mode.
  const Array s = model.score_rates();
  const Array ea = model.error().eps_a(model.tau(), J);
  const Array eb = model.error().eps_b(model.tau(), J);
  Array lin_rate = s + ea;
  Array lin_const = -eb;
  {
    const double is2 = 1.0 / model.spec().noise_var();
    for (int j = 0; j < model.spec().n_observed(); ++j) {
      const double a = model.spec().forward_diag()[j];
      lin_rate[j] += model.precond_vars()[j] * is2 * a * a;
      lin_const[j] += model.precond_vars()[j] * is2 * a * y.values[j];
    }
  }
  const Array euler_sd = (2.0 * h * model.precond_vars()).sqrt();
  const bool nongaussian = model.has_potential();

  auto run_chain = [&](int chain) {
    Array x = detail::initial_state(model, config, chain);
    Eigen::MatrixXd& kept = ens.mutable_kept(chain);
    kept.resize(kept_rows, J);
    long row = 0;
    Array noise(J);
    const std::uint64_t stream = ens.stream_id(chain);
    for (long t = 0; t < config.n_steps; ++t) {
      const std::uint64_t base = static_cast<std::uint64_t>(t) *
                                 static_cast<std::uint64_t>(J);
      for (int j = 0; j < J; ++j)
        noise[j] = rng::normal(config.seed, stream, base + j);
      if (config.integrator == Integrator::exact_ou) {
        x = ou_mean + (x - ou_mean) * ou_decay + ou_noise_sd * noise;
      } else if (!nongaussian) {
        x += h * (lin_const - lin_rate * x) + euler_sd * noise;
      } else {
        Array d = lin_const - lin_rate * x;
        for (int j = 0; j < J; ++j) {
          d[j] -= model.precond_vars()[j] * model.dphi_check(j, x[j]);
          if (ea[j] != 0.0) d[j] -= ea[j] * model.potential().mode(j).dphi(x[j]);
        }
        x += h * d + euler_sd * noise;
      }
      bool bad = false;
      for (int j = 0; j < J; ++j) {
        if (!std::isfinite(x[j]) || std::abs(x[j]) > 1e8) {
          divs[chain] = Divergence{chain, t, j, x[j]};
          bad = true;
          break;
        }
      }
      if (bad) break;
      if (t >= config.burn_in) {
        ens.accumulate(chain, x);
        if ((t - config.burn_in) % config.thin == 0) {
          kept.row(row++) = x.matrix().transpose();
        }
      }
    }
    if (row < kept_rows) kept.conservativeResize(row, J);
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (config.n_chains == 1 || hw == 1) {
    for (int c = 0; c < config.n_chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(config.n_chains);
    for (int c = 0; c < config.n_chains; ++c) pool.emplace_back(run_chain, c);
    for (auto& th : pool) th.join();
  }
  for (int c = 0; c < config.n_chains; ++c)
    if (divs[c]) ens.set_divergence(*divs[c]);
  return ens;
}

}  // namespace langevin
