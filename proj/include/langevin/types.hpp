#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace langevin {

using Array = Eigen::ArrayXd;

// Error taxonomy: construction/validation problems, runtime numerical
// failures (quadrature, undefined stationary laws), contract violations
// (calling an operation outside its stated hypotheses), and chain
// diagnostics on unusable input.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct contract_error : std::logic_error {
  using std::logic_error::logic_error;
};
struct diagnostic_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 2-D spectral index (j,k) kept as metadata when a two-parameter eigenvalue
// family is flattened to a single mode index. zeta carries the Laplacian
// eigenvalue for families that have one, 0 otherwise.
struct Mode2d {
  int j = 0;
  int k = 0;
  double zeta = 0.0;
};

// Truncated, mode-diagonalized linear inverse problem:
//   y_j = A_jj x_j + n_j,  n_j ~ N(0, sigma^2),  j <= N,
// prior N(0, Diag(mu_j)) over J >= N modes; A annihilates modes j > N.
class ModeSpectrum {
 public:
  ModeSpectrum(Array prior_vars, Array forward_diag, double noise_std,
               std::vector<Mode2d> index2d = {})
      : prior_vars_(std::move(prior_vars)),
        forward_diag_(std::move(forward_diag)),
        noise_std_(noise_std),
        index2d_(std::move(index2d)) {
    if (prior_vars_.size() < 1)
      throw config_error("ModeSpectrum: need at least one mode");
    if (forward_diag_.size() > prior_vars_.size())
      throw config_error("ModeSpectrum: n_observed exceeds n_modes");
    if (!(prior_vars_ > 0.0).all() || !prior_vars_.isFinite().all())
      throw config_error("ModeSpectrum: prior variances must be positive and finite");
    if (forward_diag_.size() > 0 && !forward_diag_.isFinite().all())
      throw config_error("ModeSpectrum: forward coefficients must be finite");
    if (!(noise_std_ > 0.0) || !std::isfinite(noise_std_))
      throw config_error("ModeSpectrum: noise_std must be positive (sigma = 0 is rejected)");
    if (!index2d_.empty() && static_cast<int>(index2d_.size()) != n_modes())
      throw config_error("ModeSpectrum: 2-D index metadata length mismatch");
  }

  int n_modes() const { return static_cast<int>(prior_vars_.size()); }
  int n_observed() const { return static_cast<int>(forward_diag_.size()); }
  bool observed(int j) const { return j < n_observed(); }

  const Array& prior_vars() const { return prior_vars_; }
  const Array& forward_diag() const { return forward_diag_; }
  double prior_var(int j) const { return prior_vars_[j]; }
  double forward_coeff(int j) const {
    return j < n_observed() ? forward_diag_[j] : 0.0;
  }
  // Length-J forward diagonal, zero on the unobserved tail.
  Array forward_full() const {
    Array a = Array::Zero(n_modes());
    a.head(n_observed()) = forward_diag_;
    return a;
  }

  double noise_std() const { return noise_std_; }
  double noise_var() const { return noise_std_ * noise_std_; }

  // Trace-class surrogate at the configured truncation.
  double prior_trace() const { return prior_vars_.sum(); }

  bool has_index2d() const { return !index2d_.empty(); }
  const Mode2d& index2d(int j) const { return index2d_[j]; }
  const std::vector<Mode2d>& index2d() const { return index2d_; }

 private:
  Array prior_vars_;
  Array forward_diag_;
  double noise_std_;
  std::vector<Mode2d> index2d_;
};

// Data in the observed (e_j) basis.
struct Observation {
  Array values;

  static Observation validated(Array values, const ModeSpectrum& spec) {
    if (values.size() != spec.n_observed())
      throw config_error("Observation: length " + std::to_string(values.size()) +
                         " does not match n_observed " +
                         std::to_string(spec.n_observed()));
    return Observation{std::move(values)};
  }
  double value(int j) const { return j < values.size() ? values[j] : 0.0; }
};

// Closed-form per-mode posterior for the Gaussian case.
struct PosteriorOracle {
  Array means;
  Array vars;
};

// Per-mode potential phi_j with derivatives and an optional convexity floor
// C_phi >= 0 (inf of phi''). One entry broadcasts to every mode.
class PotentialSpec {
 public:
  struct Mode {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    std::function<double(double)> d2phi;
    std::optional<double> convexity_floor;
  };

  static PotentialSpec uniform(Mode m) {
    PotentialSpec p;
    p.modes_.push_back(std::move(m));
    p.validate();
    return p;
  }
  static PotentialSpec per_mode(std::vector<Mode> modes) {
    if (modes.empty()) throw config_error("PotentialSpec: empty mode list");
    PotentialSpec p;
    p.modes_ = std::move(modes);
    p.validate();
    return p;
  }

  // phi(x) = scale * x^4 / 4 (convex floor 0)
  static PotentialSpec quartic(double scale = 1.0) {
    return uniform({[scale](double x) { return scale * x * x * x * x / 4.0; },
                    [scale](double x) { return scale * x * x * x; },
                    [scale](double x) { return 3.0 * scale * x * x; },
                    0.0});
  }
  // phi(x) = c * x^2 / 2 (convex floor c)
  static PotentialSpec quadratic(double curvature) {
    return uniform({[curvature](double x) { return curvature * x * x / 2.0; },
                    [curvature](double x) { return curvature * x; },
                    [curvature](double) { return curvature; },
                    curvature});
  }
  // phi(x) = c * x
  static PotentialSpec linear(double slope) {
    return uniform({[slope](double x) { return slope * x; },
                    [slope](double) { return slope; },
                    [](double) { return 0.0; },
                    0.0});
  }
  // phi(x) = scale * |x|^3 / 3, twice differentiable but not C^3
  static PotentialSpec abs_cubed(double scale = 1.0) {
    return uniform({[scale](double x) { return scale * std::abs(x) * x * x / 3.0; },
                    [scale](double x) { return scale * std::abs(x) * x; },
                    [scale](double x) { return 2.0 * scale * std::abs(x); },
                    0.0});
  }

  const Mode& mode(int j) const {
    return modes_.size() == 1 ? modes_[0] : modes_.at(static_cast<size_t>(j));
  }
  bool uniform_across_modes() const { return modes_.size() == 1; }
  int n_modes() const { return static_cast<int>(modes_.size()); }

 private:
  // Derivative implementations must agree with central finite differences to
  // relative tolerance 1e-6 at the probe points.
  void validate() const {
    const double probes[] = {-2.3, -1.1, -0.45, 0.35, 0.9, 1.75};
    for (const auto& m : modes_) {
      if (!m.phi || !m.dphi || !m.d2phi)
        throw config_error("PotentialSpec: phi, phi', phi'' must all be provided");
      if (m.convexity_floor && *m.convexity_floor < 0.0)
        throw config_error("PotentialSpec: convexity floor must be >= 0");
      for (double x : probes) {
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        const double fd1 = (m.phi(x + h) - m.phi(x - h)) / (2.0 * h);
        const double fd2 = (m.dphi(x + h) - m.dphi(x - h)) / (2.0 * h);
        if (!std::isfinite(m.phi(x)))
          throw config_error("PotentialSpec: phi not evaluable at probe point");
        const double s1 = std::max({1e-8, std::abs(fd1), std::abs(m.dphi(x))});
        const double s2 = std::max({1e-8, std::abs(fd2), std::abs(m.d2phi(x))});
        if (std::abs(fd1 - m.dphi(x)) / s1 > 1e-6)
          throw config_error("PotentialSpec: phi' disagrees with finite differences");
        if (std::abs(fd2 - m.d2phi(x)) / s2 > 1e-6)
          throw config_error("PotentialSpec: phi'' disagrees with finite differences");
      }
    }
  }

  std::vector<Mode> modes_;
};

}  // namespace langevin
