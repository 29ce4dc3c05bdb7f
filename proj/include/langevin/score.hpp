#pragma once

#include "langevin/quadrature.hpp"
#include "langevin/spectral_model.hpp"
#include "langevin/types.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace langevin {

// Per-mode eigenvalue of the OU-blended covariance C_tau:
//   mu_check_j(tau) = e^{-tau} mu_j + (1 - e^{-tau}) lambda_j.
template <class S>
S ou_blend(S mu, S lambda, double tau) {
  const double e = std::exp(-tau);
  return e * mu + (1.0 - e) * lambda;
}
inline Array ou_blend(const Array& mu, const Array& lambda, double tau) {
  const double e = std::exp(-tau);
  return e * mu + (1.0 - e) * lambda;
}

// s_j(tau; mu) = lambda_j / mu_check_j(tau); equals lambda_j / mu_j at tau=0.
template <class S>
S gaussian_score_rate(S mu, S lambda, double tau) {
  return lambda / ou_blend(mu, lambda, tau);
}
inline Array gaussian_score_rate(const Array& mu, const Array& lambda,
                                 double tau) {
  return lambda / ou_blend(mu, lambda, tau);
}

// Structured score-error model: <S - S_theta, v_j> per mode. eps_a multiplies
// the state (potential-aware convention adds phi_j'), eps_b is additive.
enum class ErrorFamily { zero, constant, linear_tau, literal };

class ScoreError {
 public:
  static ScoreError zero() { return ScoreError(); }
  static ScoreError constant_a(double a) { return with(ErrorFamily::constant, a, ErrorFamily::zero, 0.0); }
  static ScoreError constant(double a, double b) {
    return with(ErrorFamily::constant, a, ErrorFamily::constant, b);
  }
  static ScoreError linear_a(double slope) {
    return with(ErrorFamily::linear_tau, slope, ErrorFamily::zero, 0.0);
  }
  static ScoreError make(ErrorFamily fa, Array ca, ErrorFamily fb, Array cb) {
    ScoreError e;
    e.family_a_ = fa;
    e.family_b_ = fb;
    e.coeff_a_ = std::move(ca);
    e.coeff_b_ = std::move(cb);
    return e;
  }

  ErrorFamily family_a() const { return family_a_; }
  ErrorFamily family_b() const { return family_b_; }
  // eps^a_j(tau), length J (coefficients broadcast if scalar).
  Array eps_a(double tau, int n_modes) const {
    return eval(family_a_, coeff_a_, tau, n_modes);
  }
  Array eps_b(double tau, int n_modes) const {
    return eval(family_b_, coeff_b_, tau, n_modes);
  }
  // Slope array for the linear-in-tau family.
  Array linear_a_slope(int n_modes) const {
    if (family_a_ == ErrorFamily::zero) return Array::Zero(n_modes);
    if (family_a_ != ErrorFamily::linear_tau)
      throw contract_error("ScoreError: eps_a is not linear in tau");
    return broadcast(coeff_a_, n_modes);
  }
  bool a_is_linear_or_zero() const {
    return family_a_ == ErrorFamily::zero || family_a_ == ErrorFamily::linear_tau;
  }
  bool b_is_constant_or_zero() const {
    return family_b_ == ErrorFamily::zero || family_b_ == ErrorFamily::constant ||
           family_b_ == ErrorFamily::literal;
  }

 private:
  static ScoreError with(ErrorFamily fa, double a, ErrorFamily fb, double b) {
    ScoreError e;
    e.family_a_ = a == 0.0 ? ErrorFamily::zero : fa;
    e.family_b_ = b == 0.0 ? ErrorFamily::zero : fb;
    e.coeff_a_ = Array::Constant(1, a);
    e.coeff_b_ = Array::Constant(1, b);
    return e;
  }
  static Array broadcast(const Array& c, int n) {
    if (c.size() == n) return c;
    if (c.size() == 1) return Array::Constant(n, c[0]);
    throw config_error("ScoreError: coefficient length mismatch");
  }
  static Array eval(ErrorFamily f, const Array& c, double tau, int n) {
    switch (f) {
      case ErrorFamily::zero:
        return Array::Zero(n);
      case ErrorFamily::constant:
      case ErrorFamily::literal:
        return broadcast(c, n);
      case ErrorFamily::linear_tau:
        return tau * broadcast(c, n);
    }
    throw config_error("ScoreError: unknown family");
  }

  ErrorFamily family_a_ = ErrorFamily::zero;
  ErrorFamily family_b_ = ErrorFamily::zero;
  Array coeff_a_ = Array::Zero(1);
  Array coeff_b_ = Array::Zero(1);
};

enum class ErrorConvention { gaussian, potential_aware };

// Smoothed potential phi_check_j(x, tau) = -log E[exp(-phi_j(X0)) | Xtau = x]
// under the per-mode OU bridge, with conditional moments
//   m_tau(x) = e^{-tau/2} mu x / mu_check,  v_tau = mu - e^{-tau} mu^2 / mu_check.
// The x-derivative is a ratio of two quadratures (score-weighted over plain),
// not a differentiated quadrature rule.
struct CondLogPartition {
  double value = 0.0;
  double derivative = 0.0;
};

inline CondLogPartition conditional_log_partition(
    const PotentialSpec::Mode& phi, double mu, double lambda, double tau,
    double x, const QuadratureOptions& opt = {}) {
  if (tau <= 0.0) return {phi.phi(x), phi.dphi(x)};
  const double blend = ou_blend(mu, lambda, tau);
  const double m = std::exp(-0.5 * tau) * mu * x / blend;
  const double v = mu - std::exp(-tau) * mu * mu / blend;
  if (v <= 0.0) return {phi.phi(x), phi.dphi(x)};
  const double sd = std::sqrt(v);
  auto logf = [&](double z) { return -phi.phi(z) + gaussian_log_pdf(z, m, v); };

  // The potential can pull the integrand's mass far from the conditional
  // mean (e.g. steep phi with |m| large), so bracket both m and the origin,
  // locate the unimodal maximum, and integrate a +-12 sd window around it.
  const double lo = std::min(0.0, m) - opt.tail_sigmas * sd;
  const double hi = std::max(0.0, m) + opt.tail_sigmas * sd;
  const int grid = 128;
  int argmax = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    const double val = logf(lo + (hi - lo) * i / grid);
    if (std::isfinite(val) && val > best) {
      best = val;
      argmax = i;
    }
  }
  if (!std::isfinite(best))
    throw numeric_error("conditional_log_partition: integrand has no finite values");
  if (argmax == 0 || argmax == grid)
    throw numeric_error(
        "conditional_log_partition: mass escapes the search bracket "
        "(potential not Gaussian-integrable?)");
  // golden-section refinement of the maximum
  const double gr = 0.6180339887498949;
  double a = lo + (hi - lo) * (argmax - 1) / grid;
  double b = lo + (hi - lo) * (argmax + 1) / grid;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 40 && (b - a) > 1e-9 * (1.0 + std::abs(a)); ++it) {
    if (logf(c) > logf(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  const double zstar = 0.5 * (a + b);
  const double shift = logf(zstar);
  const double wa = zstar - opt.tail_sigmas * sd;
  const double wb = zstar + opt.tail_sigmas * sd;
  auto g = [&](double z) {
    const double u = logf(z) - shift;
    return u > -745.0 ? std::exp(u) : 0.0;
  };
  // tighter tolerance than the callers': these values feed outer adaptive
  // quadratures, whose error estimates sit on this noise floor
  QuadratureOptions inner = opt;
  inner.abs_tol = std::min(opt.abs_tol, 1e-11);
  const double e0 = adaptive_simpson(g, wa, wb, inner);
  if (!(e0 > 0.0) || !std::isfinite(e0))
    throw numeric_error("conditional_log_partition: quadrature failed");
  const double e1 = adaptive_simpson(
      [&](double z) { return (z - m) / v * g(z); }, wa, wb, inner);
  const double dm_dx = std::exp(-0.5 * tau) * mu / blend;
  CondLogPartition out;
  out.value = -(std::log(e0) + shift);
  out.derivative = -dm_dx * e1 / e0;
  return out;
}

// Score evaluator over the truncation. Gaussian case:
//   S_j(x) = -s_j(tau; mu) x_j.
// Non-Gaussian case (per-mode potentials):
//   S_j(x) = -lambda_j d/dx phi_check_j(x_j, tau) - s_j(tau; mu) x_j.
// perturbed_score subtracts the structured error expression of the selected
// convention.
class ScoreModel {
 public:
  ScoreModel(ModeSpectrum spec, Array precond_vars, double tau,
             ScoreError error = ScoreError::zero(),
             std::optional<PotentialSpec> potential = std::nullopt,
             std::optional<ErrorConvention> convention = std::nullopt)
      : spec_(std::move(spec)),
        lambda_(std::move(precond_vars)),
        tau_(tau),
        error_(std::move(error)),
        potential_(std::move(potential)) {
    if (lambda_.size() != spec_.n_modes())
      throw config_error("ScoreModel: preconditioner length mismatch");
    if (!(lambda_ > 0.0).all())
      throw config_error("ScoreModel: preconditioner eigenvalues must be positive");
    if (!(tau_ > 0.0))
      throw config_error("ScoreModel: tau must be positive");
    convention_ = convention.value_or(potential_ ? ErrorConvention::potential_aware
                                                 : ErrorConvention::gaussian);
    if (potential_ && convention_ != ErrorConvention::potential_aware)
      throw config_error("ScoreModel: potentials require the potential_aware convention");
    check_positivity();
  }

  const ModeSpectrum& spec() const { return spec_; }
  const Array& precond_vars() const { return lambda_; }
  double tau() const { return tau_; }
  const ScoreError& error() const { return error_; }
  bool has_potential() const { return potential_.has_value(); }
  const PotentialSpec& potential() const { return *potential_; }
  ErrorConvention convention() const { return convention_; }

  Array score_rates() const {
    return gaussian_score_rate(spec_.prior_vars(), lambda_, tau_);
  }
  double blend(int j) const {
    return ou_blend(spec_.prior_var(j), lambda_[j], tau_);
  }

  Array exact_score(const Array& x) const {
    if (x.size() != spec_.n_modes())
      throw config_error("exact_score: state length mismatch");
    Array s = -score_rates() * x;
    if (potential_) {
      for (int j = 0; j < spec_.n_modes(); ++j) {
        s[j] -= lambda_[j] * dphi_check(j, x[j]);
      }
    }
    return s;
  }

  // exact_score minus the assumption's error expression per mode.
  Array perturbed_score(const Array& x) const {
    Array s = exact_score(x);
    const Array ea = error_.eps_a(tau_, spec_.n_modes());
    const Array eb = error_.eps_b(tau_, spec_.n_modes());
    if (convention_ == ErrorConvention::gaussian || !potential_) {
      return s - (ea * x + eb);
    }
    Array state = x;
    for (int j = 0; j < spec_.n_modes(); ++j)
      state[j] += potential_->mode(j).dphi(x[j]);
    return s - (ea * state + eb);
  }

  CondLogPartition cond_log_partition(int j, double x) const {
    if (!potential_)
      throw contract_error("cond_log_partition: model has no potential");
    return conditional_log_partition(potential_->mode(j), spec_.prior_var(j),
                                     lambda_[j], tau_, x, quad_);
  }

  // phi_check_j and its x-derivative, served from a per-mode table when one
  // was built (the sampler hot loop and the quadrature-heavy KL paths);
  // direct quadrature otherwise.
  double dphi_check(int j, double x) const {
    if (table_ && table_->covers(j, x)) return table_->eval(table_->deriv, j, x);
    return cond_log_partition(j, x).derivative;
  }
  double phi_check(int j, double x) const {
    if (table_ && table_->covers(j, x)) return table_->eval(table_->value, j, x);
    return cond_log_partition(j, x).value;
  }

  // Precompute phi_check and its derivative on a dense grid per mode. Grid
  // spans +-span standard deviations of the blended prior; cubic
  // interpolation error is far below the score tolerances for smooth
  // potentials.
  void tabulate_potential_score(int points = 8193, double span = 14.0) const {
    if (!potential_) return;
    auto table = std::make_shared<Table>();
    table->lo.resize(spec_.n_modes());
    table->hi.resize(spec_.n_modes());
    table->value.resize(spec_.n_modes());
    table->deriv.resize(spec_.n_modes());
    for (int j = 0; j < spec_.n_modes(); ++j) {
      const double sd = std::sqrt(blend(j));
      table->lo[j] = -span * sd;
      table->hi[j] = span * sd;
      auto& vals = table->value[j];
      auto& ders = table->deriv[j];
      vals.resize(points);
      ders.resize(points);
      for (int i = 0; i < points; ++i) {
        const double x =
            table->lo[j] + (table->hi[j] - table->lo[j]) * i / (points - 1);
        const auto clp = cond_log_partition(j, x);
        vals[i] = clp.value;
        ders[i] = clp.derivative;
      }
    }
    table_ = std::move(table);
  }
  bool tabulated() const { return table_ != nullptr; }

 private:
  struct Table {
    std::vector<double> lo, hi;
    std::vector<std::vector<double>> value, deriv;
    bool covers(int j, double x) const {
      return x >= lo[j] && x <= hi[j];
    }
    double eval(const std::vector<std::vector<double>>& store, int j,
                double x) const {
      const auto& v = store[j];
      const int n = static_cast<int>(v.size());
      const double t = (x - lo[j]) / (hi[j] - lo[j]) * (n - 1);
      int i = static_cast<int>(t);
      if (i < 1) i = 1;
      if (i > n - 3) i = n - 3;
      const double u = t - i;
      // Catmull-Rom through the four surrounding nodes.
      const double p0 = v[i - 1], p1 = v[i], p2 = v[i + 1], p3 = v[i + 2];
      return p1 + 0.5 * u * (p2 - p0 +
                             u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                  u * (3.0 * (p1 - p2) + p3 - p0)));
    }
  };

  // Validity of the stationary law: s_j(tau; mu) + eps_a_j(tau) must stay
  // positive. Sampled on a 100-point log grid over [1e-6, 1]; only
  // violations at or below the model's own tau reject construction (small
  // p_j problems legitimately go negative at large tau they never visit;
  // stationary_law re-checks at evaluation time).
  void check_positivity() const {
    const int pts = 100;
    for (int i = 0; i < pts; ++i) {
      const double t = std::pow(10.0, -6.0 + 6.0 * i / (pts - 1));
      if (t > tau_) break;
      const Array s = gaussian_score_rate(spec_.prior_vars(), lambda_, t);
      const Array ea = error_.eps_a(t, spec_.n_modes());
      if (!((s + ea) > 0.0).all())
        throw config_error(
            "ScoreModel: s_j(tau) + eps_a_j(tau) is not positive on the tau "
            "range; stationary law would not exist");
    }
  }

  ModeSpectrum spec_;
  Array lambda_;
  double tau_;
  ScoreError error_;
  std::optional<PotentialSpec> potential_;
  ErrorConvention convention_;
  QuadratureOptions quad_;
  mutable std::shared_ptr<const Table> table_;
};

}  // namespace langevin
