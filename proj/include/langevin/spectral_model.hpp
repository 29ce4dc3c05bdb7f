#pragma once

#include "langevin/quadrature.hpp"
#include "langevin/types.hpp"

#include <cmath>
#include <functional>

namespace langevin {

// Conjugate Gaussian posterior, mode by mode:
//   v_j = (mu_j^{-1} + sigma^{-2} A_jj^2)^{-1},  m_j = v_j sigma^{-2} A_jj y_j
// for observed modes; posterior = prior (m_j = 0, v_j = mu_j) for j > N.
inline PosteriorOracle gaussian_posterior(const ModeSpectrum& spec,
                                          const Observation& y) {
  if (y.values.size() != spec.n_observed())
    throw config_error("gaussian_posterior: observation length mismatch");
  const int J = spec.n_modes(), N = spec.n_observed();
  const double is2 = 1.0 / spec.noise_var();
  PosteriorOracle out;
  out.vars = spec.prior_vars();
  out.means = Array::Zero(J);
  for (int j = 0; j < N; ++j) {
    const double a = spec.forward_diag()[j];
    const double v = 1.0 / (1.0 / spec.prior_var(j) + is2 * a * a);
    out.vars[j] = v;
    out.means[j] = v * is2 * a * y.values[j];
  }
  return out;
}

// Pre-preconditioner gradient of the log-likelihood:
//   component j = sigma^{-2} A_jj (y_j - A_jj x_j) for j <= N, 0 otherwise.
inline Array likelihood_grad(const ModeSpectrum& spec, const Observation& y,
                             const Array& x) {
  if (x.size() != spec.n_modes())
    throw config_error("likelihood_grad: state length mismatch");
  if (y.values.size() != spec.n_observed())
    throw config_error("likelihood_grad: observation length mismatch");
  const int N = spec.n_observed();
  Array g = Array::Zero(spec.n_modes());
  if (N > 0) {
    const double is2 = 1.0 / spec.noise_var();
    g.head(N) = is2 * spec.forward_diag() *
                (y.values - spec.forward_diag() * x.head(N));
  }
  return g;
}

// Unnormalized log posterior density of mode j restricted to the line:
//   x -> -phi_j(x) - (A_jj x - y_j)^2 / (2 sigma^2) - x^2 / (2 mu_j).
// The normalizer is recoverable by adaptive quadrature (see
// posterior_moments_1d).
inline std::function<double(double)> posterior_log_density_1d(
    const ModeSpectrum& spec, const Observation& y, const PotentialSpec* phi,
    int j) {
  if (j < 0 || j >= spec.n_modes())
    throw config_error("posterior_log_density_1d: mode index out of range");
  const double a = spec.forward_coeff(j);
  const double yj = spec.observed(j) ? y.values[j] : 0.0;
  const double is2 = 1.0 / spec.noise_var();
  const double imu = 1.0 / spec.prior_var(j);
  if (phi) {
    auto mode = phi->mode(j);
    return [mode, a, yj, is2, imu](double x) {
      const double r = a * x - yj;
      return -mode.phi(x) - 0.5 * is2 * r * r - 0.5 * imu * x * x;
    };
  }
  return [a, yj, is2, imu](double x) {
    const double r = a * x - yj;
    return -0.5 * is2 * r * r - 0.5 * imu * x * x;
  };
}

// Quadrature moments of the 1-D posterior density. The reference window is
// taken from the Gaussian part of the density (phi ignored), per the
// quadrature convention.
inline LogDensityMoments posterior_moments_1d(const ModeSpectrum& spec,
                                              const Observation& y,
                                              const PotentialSpec* phi, int j,
                                              const QuadratureOptions& opt = {}) {
  const PosteriorOracle g = gaussian_posterior(spec, y);
  auto logp = posterior_log_density_1d(spec, y, phi, j);
  return log_density_moments(logp, g.means[j], std::sqrt(g.vars[j]), opt);
}

}  // namespace langevin
