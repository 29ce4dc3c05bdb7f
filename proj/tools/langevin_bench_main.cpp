// langevin-bench: config-driven driver for the preconditioned Langevin
// sampling benchmarks.
//
//   run <config.json>        run an experiment, write the artifact set
//   kl-scan <config.json>    sweep tau on a log grid, emit the KL order table
//   precond <config.json>    emit the preconditioner spectrum and rate report
//   acf <run-dir>            per-mode autocorrelation times from chains.csv
//
// Relative output paths resolve under $LANGEVIN_BENCH_OUT when it is set.

#include "langevin/bench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace {

using namespace langevin;

int cmd_run(const std::string& config_path, const std::string& out) {
  ExperimentConfig cfg = load_experiment_file(config_path);
  ExperimentResult res = run_experiment(cfg, out);
  std::printf("experiment: %s\n", cfg.experiment.c_str());
  std::printf("output dir: %s\n", res.directory.string().c_str());
  std::printf("modes: %d (observed %d), chains: %d, steps: %ld\n",
              cfg.spec.n_modes(), cfg.spec.n_observed(), cfg.sampler.n_chains,
              cfg.sampler.n_steps);
  std::printf("rel L2 mean error vs oracle (observed modes): %.6g\n",
              res.rel_l2_mean_vs_oracle_observed);
  std::printf("rel L2 coefficient error vs truth: %.6g\n",
              res.rel_l2_coeff_error_vs_truth);
  if (cfg.spec.has_index2d())
    std::printf("field RMSE vs truth (33x33 grid): %.6g\n",
                res.field_rmse_vs_truth);
  if (res.stability_warning)
    std::printf("WARNING: explicit-Euler stability factor h*kappa >= 2\n");
  if (res.diverged) std::printf("WARNING: divergence flag raised\n");
  return 0;
}

std::vector<double> parse_tau_grid(const std::string& spec_str) {
  // a:b:n -> n log-spaced points from a to b
  double a = 0, b = 0;
  int n = 0;
  if (std::sscanf(spec_str.c_str(), "%lf:%lf:%d", &a, &b, &n) != 3 || n < 2 ||
      a <= 0 || b <= 0)
    throw config_error("kl-scan: --tau-grid expects a:b:n with a,b > 0, n >= 2");
  std::vector<double> taus(n);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i)
    taus[i] = std::exp(la + (lb - la) * i / (n - 1));
  return taus;
}

int cmd_kl_scan(const std::string& config_path, const std::string& grid,
                const std::string& out) {
  ExperimentConfig cfg = load_experiment_file(config_path);
  if (cfg.potential)
    throw config_error("kl-scan: requires a Gaussian (potential-free) config");
  const auto taus = parse_tau_grid(grid);
  const GroundTruth truth = synthesize_truth(cfg.spec, cfg.sampler.seed);

  const auto dir = resolve_output_dir(cfg, out);
  std::filesystem::create_directories(dir);
  std::ofstream scan(dir / "kl_scan.csv");
  std::ofstream orders(dir / "kl_scan_orders.csv");
  scan << "tau,mode,kl_exact,kl_expansion,residual\n";
  orders << "tau_hi,tau_lo,mode,residual_ratio,order_estimate\n";

  std::vector<Array> residuals;
  for (double tau : taus) {
    ExperimentConfig c = cfg;
    c.tau = tau;
    ScoreModel model = c.make_score_model();
    const KlReport rep = kl_report(model, truth.y);
    for (int j = 0; j < cfg.spec.n_modes(); ++j)
      scan << format_double(tau) << ',' << j << ','
           << format_double(rep.exact[j]) << ','
           << format_double(rep.expansion[j]) << ','
           << format_double(rep.residual[j]) << '\n';
    residuals.push_back(rep.residual);
  }
  for (size_t i = 0; i + 1 < taus.size(); ++i) {
    const double hi = taus[i + 1], lo = taus[i];
    for (int j = 0; j < cfg.spec.n_modes(); ++j) {
      const double ratio = residuals[i + 1][j] / residuals[i][j];
      orders << format_double(hi) << ',' << format_double(lo) << ',' << j << ','
             << format_double(ratio) << ','
             << format_double(std::log(std::abs(ratio)) / std::log(hi / lo))
             << '\n';
    }
  }
  std::printf("kl-scan: %zu tau points over %d modes -> %s\n", taus.size(),
              cfg.spec.n_modes(), (dir / "kl_scan.csv").string().c_str());
  return 0;
}

int cmd_precond(const std::string& config_path, const std::string& out) {
  ExperimentConfig cfg = load_experiment_file(config_path);
  const Array lambda = cfg.precond_lambda();
  Array l0 = lambda, l1 = Array::Zero(cfg.spec.n_modes());
  if (cfg.precond_family == PrecondFamily::optimal_corrected) {
    const auto ps = optimal_preconditioner(cfg.spec, cfg.tau, cfg.error);
    l0 = ps.lambda0;
    l1 = ps.lambda1;
  }
  const Array ea = cfg.error.eps_a(cfg.tau, cfg.spec.n_modes());
  const Array kappa = reversion_rate(cfg.spec, lambda, cfg.tau, ea);
  const auto dir = resolve_output_dir(cfg, out);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "precond.csv");
  csv << "mode,lambda0,lambda1,lambda,kappa\n";
  for (int j = 0; j < cfg.spec.n_modes(); ++j)
    csv << j << ',' << format_double(l0[j]) << ',' << format_double(l1[j])
        << ',' << format_double(lambda[j]) << ',' << format_double(kappa[j])
        << '\n';
  std::printf("precond: family=%s  max|kappa-1|=%.6g -> %s\n",
              to_string(cfg.precond_family).c_str(),
              (kappa - 1.0).abs().maxCoeff(),
              (dir / "precond.csv").string().c_str());
  return 0;
}

int cmd_acf(const std::string& run_dir) {
  const auto rows =
      acf_from_run_dir(run_dir, (std::filesystem::path(run_dir) / "acf.csv").string());
  double lo = rows.front().iact, hi = rows.front().iact;
  for (const auto& r : rows) {
    lo = std::min(lo, r.iact);
    hi = std::max(hi, r.iact);
  }
  std::printf("acf: %zu modes, iact in [%.3g, %.3g] (max/min %.3g) -> %s\n",
              rows.size(), lo, hi, hi / lo,
              (std::filesystem::path(run_dir) / "acf.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"preconditioned Langevin spectral sampling benchmarks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, tau_grid = "1e-4:1e-2:5", run_dir;

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "config or manifest JSON")->required();
  run->add_option("--out", out_dir, "output directory override");

  auto* scan = app.add_subcommand("kl-scan", "sweep tau, emit KL order tables");
  scan->add_option("config", config_path)->required();
  scan->add_option("--tau-grid", tau_grid, "a:b:n log grid (default 1e-4:1e-2:5)");
  scan->add_option("--out", out_dir);

  auto* pre = app.add_subcommand("precond", "emit lambda spectrum and kappa report");
  pre->add_option("config", config_path)->required();
  pre->add_option("--out", out_dir);

  auto* acf = app.add_subcommand("acf", "autocorrelation times from a run directory");
  acf->add_option("run_dir", run_dir)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (scan->parsed()) return cmd_kl_scan(config_path, tau_grid, out_dir);
    if (pre->parsed()) return cmd_precond(config_path, out_dir);
    if (acf->parsed()) return cmd_acf(run_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
