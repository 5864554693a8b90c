#include "pinchsec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pinchsec {

double Solution::total_power() const {
  return beams.squaredNorm() + an_cov.trace().real();
}

void check_solution(const Solution& sol, const Scene& scene) {
  const int n = scene.num_waveguides;
  if (sol.beams.rows() != n || sol.beams.cols() != scene.num_bobs())
    throw std::invalid_argument("beamforming matrix must be N x I");
  if (sol.an_cov.rows() != n || sol.an_cov.cols() != n)
    throw std::invalid_argument("AN covariance must be N x N");
  if (!is_hermitian(sol.an_cov)) throw std::invalid_argument("AN covariance is not Hermitian");
  const double tr = sol.an_cov.trace().real();
  if (min_eig(sol.an_cov).value < -1e-9 * std::max(tr, 0.0))
    throw std::invalid_argument("AN covariance is not PSD");
  if (sol.total_power() > scene.power * (1.0 + 1e-6))
    throw std::invalid_argument("transmit power exceeds the budget");
  if (sol.has_aux()) {
    if ((sol.aux_lambda.array() <= 0.0).any())
      throw std::invalid_argument("lambda auxiliaries must be positive");
    if ((sol.aux_tau.array() < 0.0).any())
      throw std::invalid_argument("tau auxiliaries must be nonnegative");
  }
}

double rate_for_channel(const CVector& h, const Solution& sol, int i, double noise) {
  const CVector g = sol.beams.adjoint() * h;  // g(m) = conj(h^H w_m)
  const double signal = std::norm(g(i));
  const double total = g.squaredNorm();
  const double an = (h.adjoint() * sol.an_cov * h)(0, 0).real();
  return std::log2(1.0 + signal / (total - signal + an + noise));
}

double rate_bob(const ChannelSet& ch, const Solution& sol, int i, double noise_bob) {
  return rate_for_channel(ch.bob.row(i).transpose(), sol, i, noise_bob);
}

double rate_eve(const ChannelSet& ch, const Solution& sol, int k, int i, double noise_eve) {
  return rate_for_channel(ch.eve.row(k).transpose(), sol, i, noise_eve);
}

Eigen::MatrixXd secrecy_gaps(const ChannelSet& ch, const Solution& sol, const Scene& scene) {
  const int num_bobs = static_cast<int>(ch.bob.rows());
  const int num_eves = static_cast<int>(ch.eve.rows());
  Eigen::MatrixXd gaps(num_eves, num_bobs);
  for (int i = 0; i < num_bobs; ++i) {
    const double rb = rate_bob(ch, sol, i, scene.noise_bob);
    for (int k = 0; k < num_eves; ++k) gaps(k, i) = rb - rate_eve(ch, sol, k, i, scene.noise_eve);
  }
  return gaps;
}

double secrecy_rate(const ChannelSet& ch, const Solution& sol, const Scene& scene) {
  return secrecy_gaps(ch, sol, scene).cwiseMax(0.0).minCoeff();
}

double worst_case_numerator(const CVector& h_hat, const CVector& w, const CMatrix& phi,
                            NumeratorMode mode) {
  const double nominal = std::abs(h_hat.dot(w));
  if (mode == NumeratorMode::Nominal) return nominal * nominal;
  const double spread = std::sqrt(std::max(0.0, w.dot(phi * w).real()));
  return (nominal + spread) * (nominal + spread);
}

double robust_secrecy_rate(const ChannelSet& channels_hat, const Solution& sol,
                           const Scene& scene, const UncertaintySpec& unc, NumeratorMode mode,
                           bool clamp) {
  if (!sol.has_aux()) throw std::invalid_argument("robust objective needs lambda auxiliaries");
  const int num_bobs = static_cast<int>(channels_hat.bob.rows());
  const int num_eves = static_cast<int>(channels_hat.eve.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < num_bobs; ++i) {
    const double rb = rate_bob(channels_hat, sol, i, scene.noise_bob);
    for (int k = 0; k < num_eves; ++k) {
      const double lam = sol.aux_lambda(k, i);
      if (!(lam > 0.0)) throw std::invalid_argument("lambda auxiliaries must be positive");
      const double num = worst_case_numerator(channels_hat.eve.row(k).transpose(),
                                              sol.beams.col(i), unc.phi[k], mode);
      double term = rb - std::log2(1.0 + num / lam);
      if (clamp) term = std::max(term, 0.0);
      best = std::min(best, term);
    }
  }
  return best;
}

}  // namespace pinchsec
