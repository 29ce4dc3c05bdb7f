#include "langevin/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace langevin {

namespace fs = std::filesystem;

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Eigen::MatrixXd field_reconstruction(const Array& coefficients,
                                     const std::vector<Mode2d>& index,
                                     FieldBasis basis, int grid) {
  if (grid < 2) throw config_error("field_reconstruction: grid must be >= 2x2");
  if (static_cast<size_t>(coefficients.size()) != index.size())
    throw config_error("field_reconstruction: coefficient/index length mismatch");
  constexpr double pi = 3.14159265358979323846;
  Eigen::MatrixXd field = Eigen::MatrixXd::Zero(grid, grid);
  Eigen::VectorXd x(grid);
  for (int i = 0; i < grid; ++i) x[i] = static_cast<double>(i) / (grid - 1);
  for (long m = 0; m < coefficients.size(); ++m) {
    const double c = coefficients[m];
    if (c == 0.0) continue;
    const double fj = basis == FieldBasis::brownian_sheet ? (index[m].j - 0.5)
                                                          : double(index[m].j);
    const double fk = basis == FieldBasis::brownian_sheet ? (index[m].k - 0.5)
                                                          : double(index[m].k);
    Eigen::VectorXd sj(grid), sk(grid);
    for (int i = 0; i < grid; ++i) {
      sj[i] = std::sin(pi * fj * x[i]);
      sk[i] = std::sin(pi * fk * x[i]);
    }
    field.noalias() += 2.0 * c * sj * sk.transpose();
  }
  return field;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write " + path.string());
  out << content;
}

std::string stage(const std::string& name, const std::exception& e) {
  return "stage '" + name + "' failed: " + e.what();
}

}  // namespace

std::vector<UqRow> emit_uq_table(const ChainEnsemble& ensemble,
                                 const PosteriorOracle& oracle,
                                 const Array& truth,
                                 const std::vector<Mode2d>& index,
                                 int first_k, const std::string& csv_path) {
  constexpr double z975 = 1.959964;
  const int J = ensemble.n_modes();
  first_k = std::min(first_k, J);
  std::vector<UqRow> rows;
  rows.reserve(first_k);
  const Array mean = ensemble.pooled_mean();
  std::vector<double> pool;
  for (int m = 0; m < first_k; ++m) {
    pool.clear();
    for (int c = 0; c < ensemble.n_chains(); ++c) {
      const auto col = ensemble.kept(c).col(m);
      pool.insert(pool.end(), col.data(), col.data() + col.size());
    }
    std::sort(pool.begin(), pool.end());
    auto quantile = [&](double q) {
      if (pool.empty()) return 0.0;
      const double pos = q * (pool.size() - 1);
      const size_t lo = static_cast<size_t>(pos);
      const size_t hi = std::min(lo + 1, pool.size() - 1);
      const double w = pos - lo;
      return (1.0 - w) * pool[lo] + w * pool[hi];
    };
    UqRow r;
    r.mode = m;
    if (!index.empty()) {
      r.j2 = index[m].j;
      r.k2 = index[m].k;
    }
    r.mean_est = mean[m];
    r.q025 = quantile(0.025);
    r.q975 = quantile(0.975);
    r.oracle_mean = oracle.means[m];
    const double half = z975 * std::sqrt(oracle.vars[m]);
    r.oracle_lo = oracle.means[m] - half;
    r.oracle_hi = oracle.means[m] + half;
    r.truth = m < truth.size() ? truth[m] : 0.0;
    rows.push_back(r);
  }
  if (!csv_path.empty()) {
    std::ostringstream out;
    out << "mode,j,k,mean_est,q025,q975,oracle_mean,oracle_lo,oracle_hi,truth\n";
    for (const auto& r : rows) {
      out << r.mode << ',' << r.j2 << ',' << r.k2 << ','
          << format_double(r.mean_est) << ',' << format_double(r.q025) << ','
          << format_double(r.q975) << ',' << format_double(r.oracle_mean) << ','
          << format_double(r.oracle_lo) << ',' << format_double(r.oracle_hi)
          << ',' << format_double(r.truth) << '\n';
    }
    write_file(csv_path, out.str());
  }
  return rows;
}

fs::path resolve_output_dir(const ExperimentConfig& config,
                            const std::string& output_override) {
  if (!output_override.empty()) return fs::path(output_override);
  fs::path dir = config.outputs;
  if (dir.is_relative()) {
    if (const char* root = std::getenv("LANGEVIN_BENCH_OUT"))
      dir = fs::path(root) / dir;
  }
  return dir;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& output_override) {
  ExperimentResult result;
  const fs::path dir = resolve_output_dir(config, output_override);
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    std::ofstream probe(dir / ".probe");
    if (!probe) throw config_error("run_experiment: output directory not writable: " + dir.string());
  }
  fs::remove(dir / ".probe", ec);
  result.directory = dir;

  // stage: model assembly
  Array lambda;
  try {
    lambda = config.precond_lambda();
  } catch (const std::exception& e) {
    throw config_error(stage("preconditioner", e));
  }
  ScoreModel model = [&] {
    try {
      return config.make_score_model();
    } catch (const std::exception& e) {
      throw config_error(stage("score_model", e));
    }
  }();

  // stage: ground truth + data
  try {
    result.truth = synthesize_truth(config.spec, config.sampler.seed);
    result.oracle = gaussian_posterior(config.spec, result.truth.y);
  } catch (const std::exception& e) {
    throw config_error(stage("ground_truth", e));
  }

  // stage: sampling
  ChainEnsemble ens = [&] {
    try {
      return run(model, result.truth.y, config.sampler);
    } catch (const std::exception& e) {
      throw numeric_error(stage("sampler", e));
    }
  }();
  result.diverged = ens.divergence().has_value();
  result.stability_warning = ens.warning().triggered;

  const int J = config.spec.n_modes();
  const int N = config.spec.n_observed();

  // stage: chains.csv (mode subset capped to keep large runs writable)
  long csv_max_modes = 1024;
  if (config.resolved.contains("chains_csv_max_modes"))
    csv_max_modes = config.resolved.at("chains_csv_max_modes").get<long>();
  const int csv_modes = static_cast<int>(std::min<long>(J, csv_max_modes));
  try {
    std::ostringstream out;
    out << "chain,step,mode,value\n";
    for (int c = 0; c < ens.n_chains(); ++c) {
      const auto& kept = ens.kept(c);
      for (long r = 0; r < kept.rows(); ++r) {
        const long step = config.sampler.burn_in + r * config.sampler.thin;
        for (int m = 0; m < csv_modes; ++m) {
          out << c << ',' << step << ',' << m << ','
              << format_double(kept(r, m)) << '\n';
        }
      }
    }
    write_file(dir / "chains.csv", out.str());
  } catch (const std::exception& e) {
    throw config_error(stage("chains_csv", e));
  }

  // stage: diagnostics
  ChainDiagnostics diag;
  bool have_diag = false;
  try {
    diag = chain_diagnostics(ens);
    have_diag = true;
  } catch (const diagnostic_error&) {
    diag.mean = ens.pooled_mean();
    diag.var = ens.pooled_var();
    diag.iact = Array::Zero(J);
  } catch (const std::exception& e) {
    throw numeric_error(stage("diagnostics", e));
  }
  result.diagnostics = diag;

  // reconstruction metrics (both error conventions emitted and labeled:
  // relative l2 over coefficients, and RMSE over the reconstructed field
  // grid when a 2-D basis is attached)
  {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < N; ++j) {
      const double d = diag.mean[j] - result.oracle.means[j];
      num += d * d;
      den += result.oracle.means[j] * result.oracle.means[j];
    }
    result.rel_l2_mean_vs_oracle_observed = den > 0 ? std::sqrt(num / den) : 0.0;
    const double cd = std::sqrt((diag.mean - result.truth.coefficients).square().sum());
    const double ct = std::sqrt(result.truth.coefficients.square().sum());
    result.rel_l2_coeff_error_vs_truth = ct > 0 ? cd / ct : 0.0;
    if (config.spec.has_index2d()) {
      const FieldBasis basis = config.experiment == "heat_equation"
                                   ? FieldBasis::dirichlet
                                   : FieldBasis::brownian_sheet;
      const int grid = 33;
      const Eigen::MatrixXd rec =
          field_reconstruction(diag.mean, config.spec.index2d(), basis, grid);
      const Eigen::MatrixXd tru = field_reconstruction(
          result.truth.coefficients, config.spec.index2d(), basis, grid);
      result.field_rmse_vs_truth =
          std::sqrt((rec - tru).array().square().mean());
    }
  }

  try {
    json d;
    d["n_modes"] = J;
    d["n_observed"] = N;
    d["kept_per_chain"] = json::array();
    for (int c = 0; c < ens.n_chains(); ++c)
      d["kept_per_chain"].push_back(ens.n_kept(c));
    d["mean"] = std::vector<double>(diag.mean.data(), diag.mean.data() + J);
    d["var"] = std::vector<double>(diag.var.data(), diag.var.data() + J);
    if (have_diag)
      d["iact"] = std::vector<double>(diag.iact.data(), diag.iact.data() + J);
    d["divergence"] = json();
    if (ens.divergence()) {
      d["divergence"] = {{"chain", ens.divergence()->chain},
                         {"step", ens.divergence()->step},
                         {"mode", ens.divergence()->mode},
                         {"value", ens.divergence()->value}};
    }
    d["stability_warning"] = {{"triggered", ens.warning().triggered},
                              {"max_factor", ens.warning().max_factor},
                              {"worst_mode", ens.warning().worst_mode}};
    d["rel_l2_mean_vs_oracle_observed"] = result.rel_l2_mean_vs_oracle_observed;
    d["rel_l2_coeff_error_vs_truth"] = result.rel_l2_coeff_error_vs_truth;
    d["field_rmse_vs_truth"] = result.field_rmse_vs_truth;
    write_file(dir / "diagnostics.json", d.dump(2) + "\n");
  } catch (const std::exception& e) {
    throw config_error(stage("diagnostics_json", e));
  }

  // stage: kl report (Gaussian case only)
  if (!config.potential) {
    try {
      const KlReport rep = kl_report(model, result.truth.y);
      std::ostringstream out;
      out << "mode,kl_exact,kl_expansion,residual\n";
      for (int j = 0; j < J; ++j)
        out << j << ',' << format_double(rep.exact[j]) << ','
            << format_double(rep.expansion[j]) << ','
            << format_double(rep.residual[j]) << '\n';
      write_file(dir / "kl_report.csv", out.str());
    } catch (const contract_error&) {
      // expansion undefined for this error family; skip the table
    } catch (const std::exception& e) {
      throw numeric_error(stage("kl_report", e));
    }
  }

  // stage: preconditioner table
  try {
    Array l0 = lambda, l1 = Array::Zero(J);
    if (config.precond_family == PrecondFamily::optimal_corrected) {
      const auto ps = optimal_preconditioner(config.spec, config.tau, config.error);
      l0 = ps.lambda0;
      l1 = ps.lambda1;
    }
    const Array ea = config.error.eps_a(config.tau, J);
    const Array kappa = reversion_rate(config.spec, lambda, config.tau, ea);
    std::ostringstream out;
    out << "mode,lambda0,lambda1,lambda,kappa\n";
    for (int j = 0; j < J; ++j)
      out << j << ',' << format_double(l0[j]) << ',' << format_double(l1[j])
          << ',' << format_double(lambda[j]) << ',' << format_double(kappa[j])
          << '\n';
    write_file(dir / "precond.csv", out.str());
  } catch (const std::exception& e) {
    throw config_error(stage("precond_csv", e));
  }

  // stage: uq table + truth comparison
  try {
    const int first_k = std::min(J, 100);
    emit_uq_table(ens, result.oracle, result.truth.coefficients,
                  config.spec.index2d(), first_k, (dir / "uq_table.csv").string());
    std::ostringstream out;
    out << "mode,truth,oracle_mean,empirical_mean,oracle_var,empirical_var\n";
    for (int j = 0; j < J; ++j)
      out << j << ',' << format_double(result.truth.coefficients[j]) << ','
          << format_double(result.oracle.means[j]) << ','
          << format_double(diag.mean[j]) << ','
          << format_double(result.oracle.vars[j]) << ','
          << format_double(diag.var[j]) << '\n';
    write_file(dir / "posterior_compare.csv", out.str());
  } catch (const std::exception& e) {
    throw config_error(stage("uq_table", e));
  }

  // stage: manifest
  try {
    const std::string canonical = config.resolved.dump();
    result.input_hash = fnv1a64(canonical);
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(result.input_hash));
    json m;
    m["config"] = config.resolved;
    m["seed"] = config.sampler.seed;
    m["truth_seed"] = config.sampler.seed;
    m["input_hash"] = std::string(hash);
    m["outputs"] = {"chains.csv",    "diagnostics.json",
                    "kl_report.csv", "precond.csv",
                    "uq_table.csv",  "posterior_compare.csv"};
    write_file(dir / "manifest.json", m.dump(2) + "\n");
  } catch (const std::exception& e) {
    throw config_error(stage("manifest", e));
  }

  return result;
}

std::vector<AcfRow> acf_from_run_dir(const std::string& run_dir,
                                     const std::string& csv_out) {
  const fs::path path = fs::path(run_dir) / "chains.csv";
  std::ifstream in(path);
  if (!in) throw config_error("acf: cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::map<std::pair<int, int>, std::vector<double>> series;  // (chain,mode)
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int chain = 0, mode = 0;
    long step = 0;
    double value = 0.0;
    if (std::sscanf(line.c_str(), "%d,%ld,%d,%lf", &chain, &step, &mode,
                    &value) != 4)
      throw config_error("acf: malformed row in chains.csv");
    series[{chain, mode}].push_back(value);
  }
  if (series.empty()) throw diagnostic_error("acf: no samples in chains.csv");

  std::map<int, std::vector<const std::vector<double>*>> by_mode;
  for (const auto& [key, vec] : series) by_mode[key.second].push_back(&vec);

  std::vector<AcfRow> rows;
  for (const auto& [mode, chains] : by_mode) {
    long min_n = chains.front()->size();
    for (auto* c : chains) min_n = std::min<long>(min_n, c->size());
    if (min_n < 100)
      throw diagnostic_error("acf: need at least 100 kept samples per chain");
    Eigen::VectorXd acov = Eigen::VectorXd::Zero(min_n / 2);
    double mean = 0.0, var = 0.0;
    long total = 0;
    for (auto* c : chains) {
      Eigen::Map<const Eigen::VectorXd> v(c->data(), c->size());
      acov += detail::autocovariance(v, min_n / 2);
      mean += v.sum();
      total += v.size();
    }
    mean /= static_cast<double>(total);
    for (auto* c : chains)
      for (double x : *c) var += (x - mean) * (x - mean);
    var /= static_cast<double>(total - 1);
    if (!(acov[0] > 0.0))
      throw diagnostic_error("acf: zero variance in mode " + std::to_string(mode));
    rows.push_back({mode, mean, var, detail::geyer_iact(acov)});
  }
  if (!csv_out.empty()) {
    std::ostringstream out;
    out << "mode,mean,var,iact\n";
    for (const auto& r : rows)
      out << r.mode << ',' << format_double(r.mean) << ','
          << format_double(r.var) << ',' << format_double(r.iact) << '\n';
    write_file(csv_out, out.str());
  }
  return rows;
}

}  // namespace langevin
