#include "langevin/analysis.hpp"

#include <unsupported/Eigen/FFT>

namespace langevin {
namespace detail {

Eigen::VectorXd autocovariance(const Eigen::VectorXd& x, long max_lag) {
  const long n = x.size();
  long m = 1;
  while (m < 2 * n) m <<= 1;
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(m);
  padded.head(n) = x.array() - x.mean();
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq(m);
  std::vector<double> time(padded.data(), padded.data() + m);
  fft.fwd(freq, time);
  for (auto& f : freq) f = std::norm(f);
  std::vector<std::complex<double>> spec(freq);
  std::vector<std::complex<double>> back(m);
  fft.inv(back, spec);
  Eigen::VectorXd acov(max_lag);
  for (long lag = 0; lag < max_lag; ++lag)
    acov[lag] = back[lag].real() / static_cast<double>(n - lag);
  return acov;
}

}  // namespace detail

ChainDiagnostics chain_diagnostics(const ChainEnsemble& ens) {
  const int J = ens.n_modes();
  const int K = ens.n_chains();
  long min_kept = ens.n_kept(0);
  for (int c = 1; c < K; ++c) min_kept = std::min(min_kept, ens.n_kept(c));
  if (min_kept < 100)
    throw diagnostic_error(
        "chain_diagnostics: need at least 100 kept samples per chain");
  const long max_lag = min_kept / 2;

  ChainDiagnostics d;
  d.mean = ens.pooled_mean();
  d.var = ens.pooled_var();
  d.iact.resize(J);
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd acov = Eigen::VectorXd::Zero(max_lag);
    for (int c = 0; c < K; ++c) {
      acov += detail::autocovariance(ens.kept(c).col(j), max_lag);
    }
    if (!(acov[0] > 0.0))
      throw diagnostic_error("chain_diagnostics: zero variance in mode " +
                             std::to_string(j));
    d.iact[j] = detail::geyer_iact(acov);
  }
  return d;
}

}  // namespace langevin
