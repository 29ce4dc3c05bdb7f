#pragma once

#include "langevin/types.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace langevin {

// Adaptive Simpson quadrature. Default window for densities is
// [m - 12 s, m + 12 s] around Gaussian-reference moments, absolute
// tolerance 1e-10.
struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 24;
  double tail_sigmas = 12.0;
};

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(const F& f, double a, double fa, double b,
                            double fb, double fm, double whole, double tol,
                            int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw numeric_error("quadrature: integrand not finite");
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double err = left + right - whole;
  // Accept on the requested tolerance, on a machine-relative floor (nested
  // quadratures put evaluation noise under the error estimate that no
  // splitting beats), or on depth exhaustion.
  if (std::abs(err) <= 15.0 * tol ||
      std::abs(err) <= 1e-12 * (std::abs(left) + std::abs(right)) || depth <= 0)
    return left + right + err / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double adaptive_simpson(const F& f, double a, double b,
                        const QuadratureOptions& opt = {}) {
  if (!(b > a)) return 0.0;
  // Seed the recursion on a few panels so an integrand with localized mass
  // is not mistaken for zero by the first coarse estimate.
  const int panels = 8;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double pa = a + i * h, pb = (i + 1 == panels) ? b : pa + h;
    const double fa = f(pa), fb = f(pb), fm = f(0.5 * (pa + pb));
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
      throw numeric_error("quadrature: integrand not finite at initial nodes");
    const double whole = detail::simpson(pa, fa, pb, fb, fm);
    total += detail::adaptive_simpson_rec(f, pa, fa, pb, fb, fm, whole,
                                          opt.abs_tol / panels, opt.max_depth);
  }
  return total;
}

inline double gaussian_log_pdf(double x, double mean, double var) {
  static const double log2pi = std::log(8.0 * std::atan(1.0));
  const double d = x - mean;
  return -0.5 * (log2pi + std::log(var)) - 0.5 * d * d / var;
}

// Normalizer and first two moments of an unnormalized log-density, integrated
// on the Gaussian-reference window [ref_mean +- tail_sigmas * ref_sd].
// The integrand is rescaled by its grid maximum so extreme log values do not
// overflow.
struct LogDensityMoments {
  double log_norm = 0.0;  // log of the normalizing constant
  double mean = 0.0;
  double var = 0.0;
};

namespace detail {

template <class LogF>
double log_shift(const LogF& logf, double a, double b, bool check_escape = false) {
  double shift = -std::numeric_limits<double>::infinity();
  int argmax = 0;
  const int grid = 256;
  for (int i = 0; i <= grid; ++i) {
    const double v = logf(a + (b - a) * i / grid);
    if (std::isfinite(v) && v > shift) {
      shift = v;
      argmax = i;
    }
  }
  if (!std::isfinite(shift))
    throw numeric_error("quadrature: log-density has no finite values on the window");
  // A maximum on the window boundary means the mass escapes the
  // Gaussian-reference window: the density is most likely unnormalizable.
  if (check_escape && (argmax == 0 || argmax == grid))
    throw numeric_error(
        "quadrature: density mass escapes the reference window "
        "(unnormalizable potential?)");
  return shift;
}

}  // namespace detail

template <class LogF>
LogDensityMoments log_density_moments(const LogF& logf, double ref_mean,
                                      double ref_sd,
                                      const QuadratureOptions& opt = {}) {
  const double a = ref_mean - opt.tail_sigmas * ref_sd;
  const double b = ref_mean + opt.tail_sigmas * ref_sd;
  const double shift = detail::log_shift(logf, a, b, /*check_escape=*/true);
  auto g = [&](double x) {
    const double v = logf(x) - shift;
    return v > -745.0 ? std::exp(v) : 0.0;
  };
  const double z0 = adaptive_simpson(g, a, b, opt);
  if (!(z0 > 0.0) || !std::isfinite(z0))
    throw numeric_error("quadrature: normalizer is not positive and finite");
  const double z1 = adaptive_simpson([&](double x) { return x * g(x); }, a, b, opt);
  const double z2 =
      adaptive_simpson([&](double x) { return x * x * g(x); }, a, b, opt);
  LogDensityMoments out;
  out.log_norm = std::log(z0) + shift;
  out.mean = z1 / z0;
  out.var = z2 / z0 - out.mean * out.mean;
  return out;
}

// E_p[h] for the normalized version of exp(logf).
template <class LogF, class H>
double log_density_expectation(const LogF& logf, const H& h, double ref_mean,
                               double ref_sd,
                               const QuadratureOptions& opt = {}) {
  const double a = ref_mean - opt.tail_sigmas * ref_sd;
  const double b = ref_mean + opt.tail_sigmas * ref_sd;
  const double shift = detail::log_shift(logf, a, b);
  auto g = [&](double x) {
    const double v = logf(x) - shift;
    return v > -745.0 ? std::exp(v) : 0.0;
  };
  const double z = adaptive_simpson(g, a, b, opt);
  if (!(z > 0.0)) throw numeric_error("quadrature: degenerate density");
  const double num =
      adaptive_simpson([&](double x) { return h(x) * g(x); }, a, b, opt);
  return num / z;
}

// D_KL(p1 || p2) between two unnormalized log-densities on a shared
// reference window; both normalizers are recovered by quadrature.
template <class LogF1, class LogF2>
double kl_quadrature(const LogF1& logp1, const LogF2& logp2, double ref_mean,
                     double ref_sd, const QuadratureOptions& opt = {}) {
  const auto m1 = log_density_moments(logp1, ref_mean, ref_sd, opt);
  const auto m2 = log_density_moments(logp2, ref_mean, ref_sd, opt);
  return log_density_expectation(
      logp1,
      [&](double x) {
        return (logp1(x) - m1.log_norm) - (logp2(x) - m2.log_norm);
      },
      ref_mean, ref_sd, opt);
}

}  // namespace langevin
