#pragma once

#include "langevin/analysis.hpp"
#include "langevin/config.hpp"
#include "langevin/preconditioner.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace langevin {

// RFC 4180 field quoting: quote when a field contains a comma, quote, or
// newline; embedded quotes double.
std::string csv_quote(const std::string& field);
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& bytes);

enum class FieldBasis { brownian_sheet, dirichlet };

// Truncated eigenfunction expansion evaluated on a uniform grid over
// [0,1]^2 (endpoints included):
//   brownian_sheet: phi_jk = 2 sin(pi (j-1/2) x1) sin(pi (k-1/2) x2)
//   dirichlet:      psi_jk = 2 sin(j pi x1) sin(k pi x2)
Eigen::MatrixXd field_reconstruction(const Array& coefficients,
                                     const std::vector<Mode2d>& index,
                                     FieldBasis basis, int grid);

struct UqRow {
  int mode = 0;
  int j2 = 0, k2 = 0;
  double mean_est = 0.0;
  double q025 = 0.0, q975 = 0.0;
  double oracle_mean = 0.0;
  double oracle_lo = 0.0, oracle_hi = 0.0;
  double truth = 0.0;
};

// Per-mode posterior summary vs oracle and ground truth for the first
// first_k modes; oracle interval is mean +- 1.959964 sqrt(var).
std::vector<UqRow> emit_uq_table(const ChainEnsemble& ensemble,
                                 const PosteriorOracle& oracle,
                                 const Array& truth,
                                 const std::vector<Mode2d>& index,
                                 int first_k, const std::string& csv_path);

struct ExperimentResult {
  std::filesystem::path directory;
  ChainDiagnostics diagnostics;
  PosteriorOracle oracle;
  GroundTruth truth;
  bool diverged = false;
  bool stability_warning = false;
  double rel_l2_mean_vs_oracle_observed = 0.0;
  double rel_l2_coeff_error_vs_truth = 0.0;
  double field_rmse_vs_truth = 0.0;
  std::uint64_t input_hash = 0;
};

// Run one configured experiment and write the artifact set:
//   chains.csv, diagnostics.json, kl_report.csv (Gaussian case),
//   precond.csv, uq_table.csv, posterior_compare.csv, manifest.json.
// Any module error is rethrown with the failing stage named.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& output_override = "");

// Per-mode IACT table from a previously written chains.csv.
struct AcfRow {
  int mode = 0;
  double mean = 0.0, var = 0.0, iact = 0.0;
};
std::vector<AcfRow> acf_from_run_dir(const std::string& run_dir,
                                     const std::string& csv_out = "");

// Output root: explicit override > config "outputs" > $LANGEVIN_BENCH_OUT.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::string& output_override);

}  // namespace langevin
