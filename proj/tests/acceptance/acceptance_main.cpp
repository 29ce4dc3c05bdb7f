// Acceptance suite: one check per benchmark criterion, each printed as a
// single PASS/FAIL line with the measured quantities. Tolerances are pinned
// here, not configurable. Exit status is the number of failed criteria.

#include "langevin/analysis.hpp"
#include "langevin/bench.hpp"
#include "langevin/config.hpp"
#include "langevin/preconditioner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace langevin;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail,
            double seconds) {
  std::printf("[%s] criterion %d: %s (%.1f s)\n", pass ? "PASS" : "FAIL",
              criterion, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// Shared Gaussian benchmark problem for criteria 1-2: power-law prior,
// exponentially decaying forward map, lambda = mu.
struct GaussBench {
  ModeSpectrum spec;
  Observation y;
  Array lambda;
};

GaussBench gauss_bench(int J, int N, std::uint64_t seed) {
  Array mu(J);
  for (int j = 0; j < J; ++j) mu[j] = 1.0 / double((j + 1) * (j + 1));
  Array a(N);
  for (int j = 0; j < N; ++j) a[j] = std::exp(-0.1 * (j + 1));
  ModeSpectrum spec(mu, a, 0.5);
  const auto truth = synthesize_truth(spec, seed);
  return {spec, truth.y, mu};
}

struct ChainStats {
  Array mean, var;        // pooled
  Array se_mean, se_var;  // across-chain standard errors of the pooled stats
};

ChainStats chain_stats(const ChainEnsemble& ens) {
  const int J = ens.n_modes();
  const int K = ens.n_chains();
  ChainStats s;
  s.mean = ens.pooled_mean();
  s.var = ens.pooled_var();
  Array m1 = Array::Zero(J), m2 = Array::Zero(J);
  Array v1 = Array::Zero(J), v2 = Array::Zero(J);
  for (int c = 0; c < K; ++c) {
    m1 += ens.chain_mean(c);
    m2 += ens.chain_mean(c).square();
    v1 += ens.chain_var(c);
    v2 += ens.chain_var(c).square();
  }
  m1 /= K;
  m2 /= K;
  v1 /= K;
  v2 /= K;
  s.se_mean = ((m2 - m1.square()).max(0.0) / (K - 1)).sqrt();
  s.se_var = ((v2 - v1.square()).max(0.0) / (K - 1)).sqrt();
  return s;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  const double t0 = now_s();
  const auto bench = gauss_bench(50, 25, 1001);
  ScoreModel model(bench.spec, bench.lambda, 1e-4);
  SamplerConfig cfg;
  cfg.step_size = 5e-3;
  cfg.n_steps = 200000;
  cfg.burn_in = 20000;
  cfg.n_chains = 8;
  cfg.seed = 1001;
  const auto ens = run(model, bench.y, cfg);
  const auto stats = chain_stats(ens);
  const auto post = gaussian_posterior(bench.spec, bench.y);
  int ok = 0;
  for (int j = 0; j < 50; ++j) {
    const bool mean_ok =
        std::abs(stats.mean[j] - post.means[j]) <= 4.0 * stats.se_mean[j];
    const bool var_ok =
        std::abs(stats.var[j] - post.vars[j]) <= 4.0 * stats.se_var[j];
    if (mean_ok && var_ok) ++ok;
  }
  const double dt = now_s() - t0;
  report(1, ok >= 48 && dt < 30.0,
         fmt("posterior-oracle agreement: %d/50 modes within 4 SE "
             "(need >= 48), runtime %.1fs < 30s",
             ok, dt),
         dt);
}

void criterion_2() {
  const double t0 = now_s();
  const auto bench = gauss_bench(50, 25, 1002);
  ScoreModel model(bench.spec, bench.lambda, 1e-4,
                   ScoreError::constant(0.01, 0.02));
  SamplerConfig cfg;
  cfg.step_size = 5e-3;
  cfg.n_steps = 200000;
  cfg.burn_in = 20000;
  cfg.n_chains = 8;
  cfg.seed = 1002;
  const auto ens = run(model, bench.y, cfg);
  const auto stats = chain_stats(ens);
  const auto law = stationary_law(model, bench.y);
  int ok = 0;
  for (int j = 0; j < 50; ++j) {
    const bool mean_ok =
        std::abs(stats.mean[j] - law.mean()[j]) <= 4.0 * stats.se_mean[j];
    const bool var_ok =
        std::abs(stats.var[j] - law.var()[j]) <= 4.0 * stats.se_var[j];
    if (mean_ok && var_ok) ++ok;
  }
  // tau -> 0, eps -> 0 limit: stationary law collapses onto criterion 1's
  // posterior oracle
  ScoreModel clean(bench.spec, bench.lambda, 1e-6);
  const auto limit = stationary_law(clean, bench.y);
  const auto post = gaussian_posterior(bench.spec, bench.y);
  const double lim_dev =
      ((limit.var() - post.vars) / post.vars).abs().maxCoeff() +
      (limit.mean() - post.means).abs().maxCoeff();
  const double dt = now_s() - t0;
  report(2, ok >= 48 && lim_dev < 1e-5,
         fmt("stationary law under (eps_a, eps_b) = (0.01, 0.02): %d/50 modes "
             "within 4 SE (need >= 48); tau->0 limit deviation %.2e < 1e-5",
             ok, lim_dev),
         dt);
}

void criterion_3() {
  const double t0 = now_s();
  Array mu(4), a(2), lambda(4);
  mu << 0.7, 0.5, 0.2, 0.05;
  a << 1.2, 0.6;
  lambda << 0.35, 0.3, 0.12, 0.02;
  ModeSpectrum spec(mu, a, 0.4);
  Array yv(2);
  yv << 0.9, -0.5;
  const Observation y{yv};
  const auto post = gaussian_posterior(spec, y);
  bool all_ok = true;
  double worst_lo = 10.0, worst_hi = 0.0;
  for (int j = 0; j < 4; ++j) {
    std::vector<double> resid;
    for (double tau : {1e-2, 5e-3, 2.5e-3}) {
      ScoreModel model(
          spec, lambda, tau,
          ScoreError::make(ErrorFamily::linear_tau, Array::Constant(1, 0.3),
                           ErrorFamily::constant, Array::Constant(1, 0.05)));
      const auto law = stationary_law(model, y);
      resid.push_back(kl_gaussian_1d(law.mean()[j], law.var()[j], post.means[j],
                                     post.vars[j]) -
                      kl_expansion(model, y, j));
    }
    for (size_t i = 0; i + 1 < resid.size(); ++i) {
      const double ratio = resid[i] / resid[i + 1];
      worst_lo = std::min(worst_lo, ratio);
      worst_hi = std::max(worst_hi, ratio);
      if (!(ratio >= 3.2 && ratio <= 4.8)) all_ok = false;
    }
  }
  const double dt = now_s() - t0;
  report(3, all_ok && dt < 1.0,
         fmt("KL expansion order: Richardson ratios in [%.3f, %.3f] (need "
             "[3.2, 4.8]) for observed and unobserved modes, runtime %.2fs < 1s",
             worst_lo, worst_hi, dt),
         dt);
}

void criterion_4() {
  const double t0 = now_s();
  const int J = 40, N = 20;
  Array mu(J);
  for (int j = 0; j < J; ++j) mu[j] = 1.0 / double((j + 1) * (j + 1));
  Array a(N);
  for (int j = 0; j < N; ++j) a[j] = std::exp(-0.1 * (j + 1));
  ModeSpectrum spec(mu, a, 0.3);
  Array slopes(J);
  for (int j = 0; j < J; ++j)
    slopes[j] = 0.1 * rng::normal(4004, rng::kScratchStream, j);

  auto max_dev = [&](double tau, bool corrected) {
    const auto ps = optimal_preconditioner(spec, tau, slopes);
    const Array lambda = corrected ? Array(ps.lambda()) : ps.lambda0;
    const Array kappa = reversion_rate(spec, lambda, tau, Array(slopes * tau));
    return (kappa - 1.0).abs().maxCoeff();
  };

  const double c_fit = max_dev(1e-2, true) / 1e-4;
  bool quad_ok = true;
  for (double tau : {1e-3, 1e-4})
    if (max_dev(tau, true) > 1.05 * c_fit * tau * tau) quad_ok = false;
  const double ord1 = std::log10(max_dev(1e-2, false) / max_dev(1e-3, false));
  const double ord2 = std::log10(max_dev(1e-3, false) / max_dev(1e-4, false));
  const bool lin_ok =
      ord1 >= 0.8 && ord1 <= 1.2 && ord2 >= 0.8 && ord2 <= 1.2;
  const double dt = now_s() - t0;
  report(4, quad_ok && lin_ok,
         fmt("optimal preconditioner uniformity: max|kappa-1| <= C tau^2 at "
             "tau in {1e-3,1e-4} with C fitted at 1e-2 (C=%.3g); lambda0-only "
             "order estimates %.2f, %.2f in [0.8, 1.2]",
             c_fit, ord1, ord2),
         dt);
}

void criterion_5() {
  const double t0 = now_s();
  // (a) identity prior: posterior-variance tail floors at 1
  json id_user{{"experiment", "toy_fig1"}, {"variant", "identity"}};
  id_user["sampler"] = {{"step_size", 1e-3}, {"n_steps", 30000},
                        {"n_chains", 8},     {"burn_in", 3000},
                        {"thin", 4},         {"seed", 5005},
                        {"init", "prior_draw"}};
  const auto id_cfg = load_experiment(id_user);
  const auto id_model = id_cfg.make_score_model();
  const auto id_truth = synthesize_truth(id_cfg.spec, id_cfg.sampler.seed);
  const auto id_ens = run(id_model, id_truth.y, id_cfg.sampler);
  const Array id_var = id_ens.pooled_var();
  double tail = 0.0;
  for (int j = 49; j < 100; ++j) tail += id_var[j];
  tail /= 51.0;
  const auto id_post = gaussian_posterior(id_cfg.spec, id_truth.y);
  const bool tail_ok = tail > 0.88 && tail < 1.12 && id_post.vars[99] > 0.95;

  // sigma-independence of the floor and linear growth of the trace
  auto oracle_vars = [](int J, double sigma) {
    Array mu = Array::Ones(J);
    Array a(J);
    for (int j = 0; j < J; ++j) a[j] = std::exp(-0.1 * (j + 1));
    ModeSpectrum spec(mu, a, sigma);
    Array yv = Array::Zero(J);
    return gaussian_posterior(spec, Observation{yv}).vars;
  };
  const Array v100a = oracle_vars(100, 0.05), v100b = oracle_vars(100, 0.1);
  double sig_dev = 0.0;
  for (int j = 49; j < 100; ++j)
    sig_dev = std::max(sig_dev, std::abs(v100a[j] - v100b[j]));
  const double sum100 = v100a.sum(), sum200 = oracle_vars(200, 0.05).sum(),
               sum400 = oracle_vars(400, 0.05).sum();
  const double grow1 = sum200 - sum100, grow2 = (sum400 - sum200) / 2.0;
  const bool linear_ok = std::abs(grow1 / 100.0 - 1.0) < 0.05 &&
                         std::abs(grow2 / grow1 - 1.0) < 0.05;

  // (b) trace-class prior with C = I: drift rates ~ j^2 and the Euler run
  // raises the stability warning. At tau = 1e-3 the score rate saturates at
  // 1/tau = 1000 before mode 50, so the j^2 regime is only visible at the
  // toy builtin's smaller tau = 1e-5 (see README, acceptance notes).
  const auto tc_cfg = load_experiment(json{{"experiment", "toy_fig1"}});
  const Array kappa = reversion_rate(
      tc_cfg.spec, Array::Ones(100), tc_cfg.tau, Array::Zero(100));
  bool rate_ok = true;
  for (int j = 49; j < 100; ++j) {
    const double r = kappa[j] / double((j + 1) * (j + 1));
    if (r < 0.9 || r > 1.1) rate_ok = false;
  }
  const auto tc_model = tc_cfg.make_score_model();
  const auto tc_truth = synthesize_truth(tc_cfg.spec, tc_cfg.sampler.seed);
  SamplerConfig tc_sampler = tc_cfg.sampler;
  tc_sampler.n_steps = 2000;
  tc_sampler.burn_in = 0;
  const auto tc_ens = run(tc_model, tc_truth.y, tc_sampler);
  const bool unstable_ok =
      tc_ens.warning().triggered && tc_ens.divergence().has_value();

  const double dt = now_s() - t0;
  report(5, tail_ok && sig_dev < 0.02 && linear_ok && rate_ok && unstable_ok,
         fmt("fig-1 reproduction: identity-prior variance tail %.3f ~ 1, "
             "sigma-independence dev %.1e, trace growth linear; C=I drift "
             "rates kappa_j/j^2 in [0.9,1.1] for j>=50 (tau=1e-5), warning=%d "
             "divergence=%d at h=1e-3",
             tail, sig_dev, int(tc_ens.warning().triggered),
             int(tc_ens.divergence().has_value())),
         dt);
}

void criterion_6() {
  const double t0 = now_s();
  struct RunOut {
    Array mean, var, se_mean, se_var;
    std::vector<Mode2d> index;
    double rel_l2 = 0.0;
    Array oracle_mean, oracle_var;
    Array iact_proxy;
  };
  auto do_run = [&](int m_obs) {
    json user{{"experiment", "brownian_sheet"}};
    user["problem"] = {{"n_observed", m_obs * m_obs},
                       {"forward", {{"family", "identity_proj"},
                                    {"m_observed", m_obs}}}};
    const auto cfg = load_experiment(user);
    const auto model = cfg.make_score_model();
    const auto truth = synthesize_truth(cfg.spec, cfg.sampler.seed);
    const auto ens = run(model, truth.y, cfg.sampler);
    RunOut out;
    out.mean = ens.pooled_mean();
    out.var = ens.pooled_var();
    out.index = cfg.spec.index2d();
    const auto post = gaussian_posterior(cfg.spec, truth.y);
    out.oracle_mean = post.means;
    out.oracle_var = post.vars;
    double num = 0.0, den = 0.0;
    for (int j = 0; j < cfg.spec.n_observed(); ++j) {
      const double d = out.mean[j] - post.means[j];
      num += d * d;
      den += post.means[j] * post.means[j];
    }
    out.rel_l2 = std::sqrt(num / den);
    // per-mode MC error scale from the AR(1) structure of the Euler chain:
    // iact ~= 2/(h kappa_j), n_total = chains * kept-steps
    const Array kappa = reversion_rate(
        cfg.spec, model.precond_vars(), cfg.tau,
        Array::Zero(cfg.spec.n_modes()));
    const double n_total = double(cfg.sampler.n_chains) *
                           double(cfg.sampler.n_steps - cfg.sampler.burn_in);
    const Array iact =
        (2.0 / (cfg.sampler.step_size * kappa)).max(1.0);
    out.iact_proxy = iact;
    out.se_mean = (out.var * iact / n_total).sqrt();
    out.se_var = out.var * (2.0 * iact / n_total).sqrt();
    return out;
  };

  const auto r75 = do_run(75);
  const auto r200 = do_run(200);
  const bool l2_ok = r75.rel_l2 < 0.05 && r200.rel_l2 < 0.05;

  // discretization invariance: modes unobserved at M = 75 keep their
  // marginal statistics when every mode becomes observed at M = 200.
  // match modes by their (j,k) pair
  std::vector<int> lookup(201 * 201, -1);
  for (size_t i = 0; i < r200.index.size(); ++i)
    lookup[r200.index[i].j * 201 + r200.index[i].k] = static_cast<int>(i);
  long compared = 0, ok = 0;
  for (size_t i = 0; i < r75.index.size(); ++i) {
    const auto& id = r75.index[i];
    if (id.j <= 75 && id.k <= 75) continue;  // observed in both runs
    const int i200 = lookup[id.j * 201 + id.k];
    ++compared;
    const double dse_m = 4.0 * std::sqrt(r75.se_mean[i] * r75.se_mean[i] +
                                         r200.se_mean[i200] * r200.se_mean[i200]);
    const double dse_v = 4.0 * std::sqrt(r75.se_var[i] * r75.se_var[i] +
                                         r200.se_var[i200] * r200.se_var[i200]);
    if (std::abs(r75.mean[i] - r200.mean[i200]) <= dse_m &&
        std::abs(r75.var[i] - r200.var[i200]) <= dse_v)
      ++ok;
  }
  const double frac = double(ok) / double(compared);
  const double dt = now_s() - t0;
  report(6, l2_ok && frac >= 0.95 && dt < 60.0,
         fmt("brownian sheet: rel L2 mean error %.3f / %.3f (< 0.05) at "
             "M=75/200; unobserved-mode invariance %.1f%% of %ld modes within "
             "4 SE (need >= 95%%), runtime %.1fs < 60s",
             r75.rel_l2, r200.rel_l2, 100.0 * frac, compared, dt),
         dt);
}

void criterion_7() {
  const double t0 = now_s();
  // (a) oracle variance matches the closed spectral formula
  const auto heat_cfg = load_experiment(json{{"experiment", "heat_equation"}});
  const auto truth = synthesize_truth(heat_cfg.spec, heat_cfg.sampler.seed);
  const auto post = gaussian_posterior(heat_cfg.spec, truth.y);
  double formula_dev = 0.0;
  const double beta = 0.1, T = 0.1, s2 = 0.005 * 0.005;
  for (int j = 0; j < heat_cfg.spec.n_modes(); ++j) {
    const double zeta = heat_cfg.spec.index2d(j).zeta;
    const double v = std::exp(-beta * zeta) * s2 /
                     (std::exp(-(beta + 2 * T) * zeta) + s2);
    formula_dev = std::max(formula_dev,
                           std::abs(post.vars[j] - v) / std::max(v, 1e-300));
  }
  const bool formula_ok = formula_dev < 1e-12;

  // (b) IACT uniformity contrast under the same wall-clock budget, realized
  // as equal iteration counts at equal per-iteration cost (a measured-seconds
  // budget would break run reproducibility)
  auto iact_run = [&](bool vanilla) {
    json user{{"experiment", "heat_equation"}};
    if (vanilla) user["variant"] = "vanilla";
    user["sampler"] = {{"step_size", vanilla ? 1e-6 : 1e-2},
                       {"n_steps", 2000000},
                       {"n_chains", 1},
                       {"burn_in", vanilla ? 0 : 200000},
                       {"thin", 100},
                       {"seed", 7007},
                       {"init", "prior_draw"}};
    const auto cfg = load_experiment(user);
    const auto model = cfg.make_score_model();
    const auto tr = synthesize_truth(cfg.spec, cfg.sampler.seed);
    const auto ens = run(model, tr.y, cfg.sampler);
    const auto diag = chain_diagnostics(ens);
    return diag;
  };
  const auto pre = iact_run(false);
  const auto van = iact_run(true);
  const double pre_ratio = pre.iact.maxCoeff() / pre.iact.minCoeff();
  const double van_ratio = van.iact.maxCoeff() / van.iact.minCoeff();
  const bool iact_ok = pre_ratio < 3.0 && van_ratio > 10.0;

  // (c) fine-mode variance error contrast at tau = 1e-1
  auto var_err = [&](bool vanilla) {
    json user{{"experiment", "heat_equation"}};
    user["score"] = {{"tau", 1e-1}};
    if (vanilla) {
      user["variant"] = "vanilla";  // reference vanilla profile: 1.5e4 @ 1e-6
      user["sampler"] = {{"seed", 7008}};
    } else {
      user["sampler"] = {{"step_size", 1e-2}, {"n_steps", 50000},
                         {"n_chains", 4},     {"burn_in", 5000},
                         {"thin", 10},        {"seed", 7008},
                         {"init", "prior_draw"}};
    }
    const auto cfg = load_experiment(user);
    const auto model = cfg.make_score_model();
    const auto tr = synthesize_truth(cfg.spec, cfg.sampler.seed);
    const auto ens = run(model, tr.y, cfg.sampler);
    const auto p = gaussian_posterior(cfg.spec, tr.y);
    const Array var = ens.pooled_var();
    const double is2 = 1.0 / cfg.spec.noise_var();
    double err = 0.0;
    int n = 0;
    for (int j = 0; j < cfg.spec.n_modes(); ++j) {
      const double a = cfg.spec.forward_coeff(j);
      if (cfg.spec.prior_var(j) * is2 * a * a > 1e-2) continue;  // coarse
      err += std::abs(var[j] - p.vars[j]) / p.vars[j];
      ++n;
    }
    return err / n;
  };
  const double err_van = var_err(true);
  const double err_pre = var_err(false);
  const bool var_ok = err_van >= 5.0 * err_pre;

  const double dt = now_s() - t0;
  report(7, formula_ok && iact_ok && var_ok,
         fmt("heat equation: oracle-variance formula dev %.1e < 1e-12; IACT "
             "max/min %.2f (< 3) preconditioned vs %.1f (> 10) vanilla; "
             "fine-mode variance error %.3f vanilla vs %.3f preconditioned "
             "(ratio %.1f >= 5)",
             formula_dev, pre_ratio, van_ratio, err_van, err_pre,
             err_van / std::max(err_pre, 1e-12)),
         dt);
}

void criterion_8() {
  const double t0 = now_s();
  // (a) phi = 0: non-gaussian score equals the gaussian score to 1e-10
  auto zero_phi = PotentialSpec::uniform(
      {[](double) { return 0.0; }, [](double) { return 0.0; },
       [](double) { return 0.0; }, 0.0});
  double score_dev = 0.0;
  for (double tau : {1e-3, 1e-1}) {
    ModeSpectrum spec1(Array::Constant(1, 0.7), Array(), 1.0);
    ScoreModel ng(spec1, Array::Constant(1, 0.4), tau, ScoreError::zero(),
                  zero_phi);
    ScoreModel g(spec1, Array::Constant(1, 0.4), tau);
    for (double x = -5.0; x <= 5.0; x += 0.25) {
      const Array xs = Array::Constant(1, x);
      score_dev = std::max(
          score_dev, std::abs(ng.exact_score(xs)[0] - g.exact_score(xs)[0]));
    }
  }
  const bool score_ok = score_dev < 1e-10;

  // (b) stationary density vs a 1e6-step chain, KS < 0.01, phi = x^4/4
  ModeSpectrum spec1(Array::Ones(1), Array(), 1.0);
  ScoreModel model(spec1, Array::Ones(1), 1e-2, ScoreError::zero(),
                   PotentialSpec::quartic());
  const Observation no_data{Array()};
  SamplerConfig cfg;
  cfg.step_size = 0.02;
  cfg.n_steps = 1000000;
  cfg.burn_in = 50000;
  cfg.seed = 8008;
  const auto ens = run(model, no_data, cfg);
  const auto law = stationary_law(model, no_data);
  // quadrature-normalized CDF on a fine grid
  const int G = 8192;
  const double sd = std::sqrt(law.var()[0]);
  const double lo = law.mean()[0] - 10.0 * sd, hi = law.mean()[0] + 10.0 * sd;
  std::vector<double> grid(G + 1), cdf(G + 1, 0.0);
  std::vector<double> dens(G + 1);
  for (int i = 0; i <= G; ++i) {
    grid[i] = lo + (hi - lo) * i / G;
    dens[i] = std::exp(law.log_density_unnorm(0, grid[i]));
  }
  for (int i = 1; i <= G; ++i)
    cdf[i] = cdf[i - 1] +
             0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
  for (int i = 0; i <= G; ++i) cdf[i] /= cdf[G];
  std::vector<double> samples;
  const auto& kept = ens.kept(0);
  samples.reserve(kept.rows());
  for (long r = 0; r < kept.rows(); ++r) samples.push_back(kept(r, 0));
  std::sort(samples.begin(), samples.end());
  double ks = 0.0;
  const double n = double(samples.size());
  auto cdf_at = [&](double x) {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    const double t = (x - lo) / (hi - lo) * G;
    const int i = std::min(G - 1, static_cast<int>(t));
    const double w = t - i;
    return (1.0 - w) * cdf[i] + w * cdf[i + 1];
  };
  for (size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf_at(samples[i]);
    ks = std::max(ks, std::abs(F - double(i) / n));
    ks = std::max(ks, std::abs(F - double(i + 1) / n));
  }
  const bool ks_ok = ks < 0.01;

  // (c) KL-decomposition tracking: log-log residual slope over
  // tau in [1e-4, 1e-2]. The assembled B + E tracks the quadrature KL at
  // O(tau^2), strictly inside the O(tau^1.5) remainder bound the [1.3, 1.7]
  // window encodes, so this check is expected to report a slope of ~2.0 and
  // fail the window as stated (see README, acceptance notes).
  Array muv(1);
  muv << 0.8;
  ModeSpectrum spec_c(muv, Array::Constant(1, 1.0), 0.5);
  const Observation y_c{Array::Constant(1, 1.3)};
  const auto phi = PotentialSpec::quartic();
  auto log_oracle = posterior_log_density_1d(spec_c, y_c, &phi, 0);
  std::vector<double> lt, lr;
  for (double tau : {1e-2, 4.64e-3, 2.15e-3, 1e-3, 4.64e-4, 2.15e-4, 1e-4}) {
    ScoreModel m(spec_c, Array::Constant(1, 0.5), tau,
                 ScoreError::make(ErrorFamily::linear_tau,
                                  Array::Constant(1, 0.4),
                                  ErrorFamily::constant,
                                  Array::Constant(1, 0.06)),
                 PotentialSpec::quartic());
    const auto law_c = stationary_law(m, y_c);
    const double kl = kl_nongaussian_1d(law_c, 0, log_oracle);
    const auto terms = theorem_c1_terms(m, y_c, 0);
    const double resid = std::abs(kl - terms.total(tau, 0.4 * tau, 0.5));
    lt.push_back(std::log(tau));
    lr.push_back(std::log(std::max(resid, 1e-300)));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double np = double(lt.size());
  for (size_t i = 0; i < lt.size(); ++i) {
    sx += lt[i];
    sy += lr[i];
    sxx += lt[i] * lt[i];
    sxy += lt[i] * lr[i];
  }
  const double slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
  const bool slope_ok = slope >= 1.3 && slope <= 1.7;

  const double dt = now_s() - t0;
  report(8, score_ok && ks_ok && slope_ok,
         fmt("non-gaussian suite: score(phi=0) dev %.1e < 1e-10; KS %.4f < "
             "0.01 for phi=x^4/4; C.1 residual slope %.2f vs stated window "
             "[1.3, 1.7]%s",
             score_dev, ks, slope,
             slope_ok ? ""
                      : " -- the assembled B+E tracks the KL at O(tau^2), "
                        "strictly inside the O(tau^1.5) remainder bound this "
                        "window encodes; see README, acceptance notes"),
         dt);
}

void criterion_9() {
  const double t0 = now_s();
  // bounded case: sum |eps_b / lambda| < infinity (power-law spec)
  auto bounded_total = [&](int J) {
    Array mu(J), eb(J);
    for (int j = 0; j < J; ++j) {
      mu[j] = 1.0 / double((j + 1) * (j + 1));
      eb[j] = 0.3 * mu[j] / double((j + 1) * (j + 1));  // eps_b/lambda = 0.3 j^-2
    }
    ModeSpectrum spec(mu, Array(), 0.5);
    ScoreModel model(spec, mu, 1e-3,
                     ScoreError::make(ErrorFamily::zero, Array::Zero(1),
                                      ErrorFamily::literal, eb));
    const auto rep = kl_report(model, Observation{Array()});
    return rep.total_exact();
  };
  const double b200 = bounded_total(200), b400 = bounded_total(400);
  const double rel_change = std::abs(b400 - b200) / b200;
  const bool bounded_ok = rel_change < 0.05;

  // violating case: eps_b / lambda constant on the identity prior; the
  // per-mode KL is then constant and the total grows linearly in J
  auto violating_total = [&](int J) {
    ModeSpectrum spec(Array::Ones(J), Array(), 0.5);
    ScoreModel model(spec, Array::Ones(J), 1e-3,
                     ScoreError::constant(0.0, 0.1));
    const auto rep = kl_report(model, Observation{Array()});
    return rep.total_exact();
  };
  const double v200 = violating_total(200), v400 = violating_total(400);
  const double growth = v400 / v200;
  const double slope_per_mode = (v400 - v200) / 200.0;
  const bool violating_ok = growth > 1.9 && growth < 2.1 &&
                            std::abs(slope_per_mode / 0.005 - 1.0) < 0.05;

  const double dt = now_s() - t0;
  report(9, bounded_ok && violating_ok,
         fmt("global boundedness: bounded spec total KL changes %.2e%% from "
             "J=200 to 400 (< 5%%); violating spec grows x%.3f with %.5f per "
             "mode (~ eps_b^2/(2 lambda^2) = 0.005)",
             100.0 * rel_change, growth, slope_per_mode),
         dt);
}

}  // namespace

int main() {
  std::printf("acceptance suite: preconditioned Langevin spectral benchmarks\n");
  const double t0 = now_s();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  std::printf("%d/9 criteria passed (total %.1f s)\n", 9 - g_failures,
              now_s() - t0);
  return g_failures;
}
