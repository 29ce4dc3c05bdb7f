#pragma once

#include "langevin/preconditioner.hpp"
#include "langevin/sampler.hpp"
#include "langevin/score.hpp"
#include "langevin/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace langevin {

using json = nlohmann::ordered_json;

// Experiment configuration resolved from JSON. Schema (field names fixed):
//   problem:  { "n_modes", "n_observed",
//               "prior":   { "family": "literal"|"power_law"|"exp_laplacian"|
//                            "brownian_sheet_kl", ... },
//               "forward": { "family": "literal"|"identity_proj"|
//                            "heat_semigroup", ... },
//               "noise_std", "potential"? }
//   score:    { "tau", "error": { "eps_a": {"family": ...}, "eps_b": {...},
//               "convention": "gaussian"|"potential_aware" } }
//   sampler:  { "step_size", "n_steps", "n_chains", "burn_in", "thin",
//               "seed", "init", "integrator"? }
//   precond:  { "family": "identity"|"prior"|"posterior_form"|
//               "optimal_corrected"|"literal", "values"? }
//   experiment: "toy_fig1"|"brownian_sheet"|"heat_equation"|"custom"
//   outputs:  directory path
struct ExperimentConfig {
  std::string experiment = "custom";
  std::string outputs = "out";
  json resolved;

  ModeSpectrum spec{Array::Ones(1), Array(), 1.0};
  std::optional<PotentialSpec> potential;
  double tau = 1e-3;
  ScoreError error;
  ErrorConvention convention = ErrorConvention::gaussian;
  PrecondFamily precond_family = PrecondFamily::optimal_corrected;
  Array precond_literal;
  SamplerConfig sampler;

  Array precond_lambda() const {
    return preconditioner_lambda(precond_family, spec, tau, error,
                                 precond_literal);
  }
  ScoreModel make_score_model() const {
    return ScoreModel(spec, precond_lambda(), tau, error, potential,
                      potential ? ErrorConvention::potential_aware : convention);
  }
};

ModeSpectrum parse_problem(const json& problem,
                           std::optional<PotentialSpec>* potential_out);
ScoreError parse_score_error(const json& error_block, ErrorConvention* conv_out);
SamplerConfig parse_sampler(const json& sampler_block);
PrecondFamily parse_precond_family(const std::string& name);

// Expand a builtin experiment tag into a complete config; user-provided
// blocks override the builtin defaults block-field by block-field.
json expand_builtin(const json& user);

// Parse a full experiment config (expanding builtins first).
ExperimentConfig load_experiment(const json& user);
ExperimentConfig load_experiment_file(const std::string& path);

// Ground truth and observations for a run: a prior draw from the dedicated
// truth stream plus observation noise, both keyed to the given seed.
struct GroundTruth {
  Array coefficients;  // full length-J prior draw
  Observation y;
};
GroundTruth synthesize_truth(const ModeSpectrum& spec, std::uint64_t seed);

}  // namespace langevin
