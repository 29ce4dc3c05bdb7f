#include "langevin/config.hpp"

#include <doctest.h>

#include <cmath>

using namespace langevin;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("literal problem block parses with exact field names") {
  const json j = json::parse(R"({
    "n_modes": 3, "n_observed": 2,
    "prior": {"family": "literal", "values": [1.0, 0.5, 0.25]},
    "forward": {"family": "literal", "values": [1.0, 0.7]},
    "noise_std": 0.5
  })");
  std::optional<PotentialSpec> pot;
  const auto spec = parse_problem(j, &pot);
  CHECK(spec.n_modes() == 3);
  CHECK(spec.n_observed() == 2);
  CHECK(spec.prior_var(2) == 0.25);
  CHECK(spec.forward_diag()[1] == 0.7);
  CHECK(spec.noise_std() == 0.5);
  CHECK_FALSE(pot.has_value());
}

TEST_CASE("power-law prior") {
  const json j = json::parse(R"({
    "n_modes": 4, "n_observed": 0,
    "prior": {"family": "power_law", "decay": 2.0},
    "forward": {"family": "literal", "values": []},
    "noise_std": 1.0
  })");
  const auto spec = parse_problem(j, nullptr);
  CHECK(spec.prior_var(0) == doctest::Approx(1.0));
  CHECK(spec.prior_var(3) == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("brownian-sheet KL flattening orders the observed block first") {
  const json j = json::parse(R"({
    "n_modes": 16, "n_observed": 4,
    "prior": {"family": "brownian_sheet_kl", "m": 4},
    "forward": {"family": "identity_proj", "m_observed": 2},
    "noise_std": 0.01
  })");
  const auto spec = parse_problem(j, nullptr);
  REQUIRE(spec.has_index2d());
  auto mu_jk = [](int jj, int kk) {
    const double f = (jj - 0.5) * kPi * (kk - 0.5) * kPi;
    return 1.0 / (f * f);
  };
  // observed block: (1,1), then the (1,2)/(2,1) tie, then (2,2)
  CHECK(spec.index2d(0).j == 1);
  CHECK(spec.index2d(0).k == 1);
  CHECK(spec.prior_var(0) == doctest::Approx(mu_jk(1, 1)).epsilon(1e-14));
  CHECK(spec.index2d(3).j == 2);
  CHECK(spec.index2d(3).k == 2);
  // first unobserved mode is (1,3), whose eigenvalue exceeds mu_{2,2}:
  // the observed set cannot be a prefix of a globally sorted order
  CHECK(spec.index2d(4).j == 1);
  CHECK(spec.index2d(4).k == 3);
  CHECK(spec.prior_var(4) > spec.prior_var(3));
  // descending within each block
  for (int i = 1; i < 4; ++i) CHECK(spec.prior_var(i) <= spec.prior_var(i - 1));
  for (int i = 5; i < 16; ++i) CHECK(spec.prior_var(i) <= spec.prior_var(i - 1));
  CHECK((spec.forward_diag() == 1.0).all());
}

TEST_CASE("exp-laplacian prior with heat semigroup forward") {
  const json j = json::parse(R"({
    "n_modes": 9, "n_observed": 9,
    "prior": {"family": "exp_laplacian", "m": 3, "beta": 0.1},
    "forward": {"family": "heat_semigroup", "time": 0.1},
    "noise_std": 0.005
  })");
  const auto spec = parse_problem(j, nullptr);
  const double zeta11 = kPi * kPi * 2.0;
  CHECK(spec.index2d(0).j == 1);
  CHECK(spec.index2d(0).zeta == doctest::Approx(zeta11).epsilon(1e-14));
  CHECK(spec.prior_var(0) == doctest::Approx(std::exp(-0.1 * zeta11)).epsilon(1e-14));
  CHECK(spec.forward_diag()[0] ==
        doctest::Approx(std::exp(-0.1 * zeta11)).epsilon(1e-14));
  // eigenvalues sorted descending when everything is observed
  for (int i = 1; i < 9; ++i) CHECK(spec.prior_var(i) <= spec.prior_var(i - 1));
}

TEST_CASE("score error block") {
  ErrorConvention conv;
  const auto err = parse_score_error(json::parse(R"({
    "eps_a": {"family": "linear_tau", "value": 0.1},
    "eps_b": {"family": "constant", "value": 0.02},
    "convention": "potential_aware"
  })"), &conv);
  CHECK(conv == ErrorConvention::potential_aware);
  CHECK(err.eps_a(0.5, 2)[0] == doctest::Approx(0.05));
  CHECK(err.eps_b(0.5, 2)[1] == doctest::Approx(0.02));
  CHECK(err.family_a() == ErrorFamily::linear_tau);

  const auto lit = parse_score_error(json::parse(R"({
    "eps_a": {"family": "literal", "values": [0.1, -0.2]},
    "eps_b": {"family": "zero"}
  })"), nullptr);
  CHECK(lit.eps_a(9.0, 2)[1] == doctest::Approx(-0.2));
  CHECK(lit.eps_b(9.0, 2)[0] == 0.0);
}

TEST_CASE("sampler block") {
  const auto cfg = parse_sampler(json::parse(R"({
    "step_size": 0.01, "n_steps": 1000, "n_chains": 4,
    "burn_in": 100, "thin": 5, "seed": 99,
    "init": "zero", "integrator": "exact_ou"
  })"));
  CHECK(cfg.step_size == 0.01);
  CHECK(cfg.n_chains == 4);
  CHECK(cfg.thin == 5);
  CHECK(cfg.seed == 99);
  CHECK(cfg.init == InitKind::zero);
  CHECK(cfg.integrator == Integrator::exact_ou);
  const auto lit = parse_sampler(json::parse(
      R"({"step_size": 0.1, "n_steps": 10, "init": [0.5, -0.5]})"));
  CHECK(lit.init == InitKind::literal);
  CHECK(lit.init_values[1] == -0.5);
  CHECK_THROWS_AS(parse_sampler(json::parse(
                      R"({"step_size": 0.1, "n_steps": 10, "burn_in": 10})")),
                  config_error);
}

TEST_CASE("builtin experiments carry the published parameters") {
  SUBCASE("brownian sheet") {
    const auto cfg = load_experiment(json{{"experiment", "brownian_sheet"}});
    CHECK(cfg.spec.n_modes() == 40000);
    CHECK(cfg.spec.n_observed() == 75 * 75);
    CHECK(cfg.spec.noise_std() == 0.01);
    CHECK(cfg.sampler.step_size == 0.5);
    CHECK(cfg.sampler.n_steps == 5000);
    CHECK(cfg.spec.prior_var(0) ==
          doctest::Approx(1.0 / std::pow(0.5 * kPi * 0.5 * kPi, 2)).epsilon(1e-12));
    CHECK(cfg.precond_family == PrecondFamily::posterior_form);
  }
  SUBCASE("heat equation") {
    const auto cfg = load_experiment(json{{"experiment", "heat_equation"}});
    CHECK(cfg.spec.n_modes() == 225);
    CHECK(cfg.spec.n_observed() == 225);
    CHECK(cfg.spec.noise_std() == 0.005);
    CHECK(cfg.tau == 1e-3);
    CHECK(cfg.error.family_a() == ErrorFamily::linear_tau);
    CHECK(cfg.precond_family == PrecondFamily::optimal_corrected);
    const double zeta11 = 2 * kPi * kPi;
    CHECK(cfg.spec.forward_diag()[0] ==
          doctest::Approx(std::exp(-0.1 * zeta11)).epsilon(1e-12));
  }
  SUBCASE("heat equation, vanilla variant") {
    const auto cfg = load_experiment(
        json{{"experiment", "heat_equation"}, {"variant", "vanilla"}});
    CHECK(cfg.precond_family == PrecondFamily::prior);
    CHECK(cfg.sampler.step_size == 1e-6);
    CHECK(cfg.sampler.n_steps == 15000);
  }
  SUBCASE("toy fig-1") {
    const auto cfg = load_experiment(json{{"experiment", "toy_fig1"}});
    CHECK(cfg.spec.n_modes() == 100);
    CHECK(cfg.spec.noise_std() == 0.05);
    CHECK(cfg.spec.forward_diag()[0] == doctest::Approx(std::exp(-0.1)));
    CHECK(cfg.spec.prior_var(9) == doctest::Approx(0.01));
    CHECK(cfg.precond_family == PrecondFamily::identity);
    const auto idp = load_experiment(
        json{{"experiment", "toy_fig1"}, {"variant", "identity"}});
    CHECK(idp.spec.prior_var(9) == doctest::Approx(1.0));
  }
}

TEST_CASE("user overrides merge into builtin blocks") {
  json user{{"experiment", "toy_fig1"}};
  user["sampler"] = {{"seed", 4242}, {"n_steps", 3333}};
  const auto cfg = load_experiment(user);
  CHECK(cfg.sampler.seed == 4242);
  CHECK(cfg.sampler.n_steps == 3333);
  CHECK(cfg.sampler.step_size == 1e-3);  // builtin default preserved
}

TEST_CASE("invalid configs raise configuration errors") {
  CHECK_THROWS_AS(load_experiment(json{{"experiment", "nope"}}), config_error);
  json bad{{"experiment", "custom"}};
  bad["problem"] = {{"n_modes", 2},
                    {"n_observed", 3},
                    {"prior", {{"family", "literal"}, {"values", {1.0, 1.0}}}},
                    {"forward", {{"family", "identity_proj"}}},
                    {"noise_std", 0.1}};
  bad["score"] = {{"tau", 1e-3}};
  bad["precond"] = {{"family", "prior"}};
  bad["sampler"] = {{"step_size", 0.1}, {"n_steps", 10}};
  CHECK_THROWS_AS(load_experiment(bad), config_error);
}

TEST_CASE("ground truth synthesis is seed-reproducible") {
  const json j = json::parse(R"({
    "n_modes": 5, "n_observed": 3,
    "prior": {"family": "power_law", "decay": 2.0},
    "forward": {"family": "identity_proj"},
    "noise_std": 0.2
  })");
  const auto spec = parse_problem(j, nullptr);
  const auto t1 = synthesize_truth(spec, 7);
  const auto t2 = synthesize_truth(spec, 7);
  const auto t3 = synthesize_truth(spec, 8);
  CHECK((t1.coefficients - t2.coefficients).abs().maxCoeff() == 0.0);
  CHECK((t1.y.values - t2.y.values).abs().maxCoeff() == 0.0);
  CHECK((t1.coefficients - t3.coefficients).abs().maxCoeff() > 0.0);
  CHECK(t1.y.values.size() == 3);
  // observation = A truth + noise, with A = identity projection here
  CHECK((t1.y.values - t1.coefficients.head(3)).abs().maxCoeff() < 5 * 0.2 * 4);
}
