#include "pinchsec/robust.hpp"

#include <cmath>
#include <limits>

#include "pinchsec/metrics.hpp"

namespace pinchsec {

CMatrix channel_jacobian(const Scene& scene, const PinchLayout& layout, const Vec3& eve) {
  const double lambda = free_space_wavelength(scene.carrier);
  const double k0 = 2.0 * kPi / lambda;
  const double amp = std::sqrt(path_gain(scene.carrier));
  CMatrix jac = CMatrix::Zero(layout.num_waveguides(), 3);
  for (int n = 0; n < layout.num_waveguides(); ++n) {
    for (int m = 0; m < layout.pas_per_waveguide(); ++m) {
      const Vec3 delta = eve - layout.pa_position(n, m);
      const double r = delta.norm();
      if (!(r > 0.0)) throw SingularityError("Eve coincides with a pinching antenna");
      const Complex h1 = inwaveguide_coeff(layout, n, m, scene.carrier, scene.neff);
      // d/dp [amp e^{-j k r} / r] = amp e^{-j k r} (-1/r^2 - j k / r) dr/dp
      const Complex radial =
          amp * std::polar(1.0, -k0 * r) * Complex(-1.0 / (r * r), -k0 / r);
      for (int a = 0; a < 3; ++a) jac(n, a) += h1 * radial * (delta(a) / r);
    }
  }
  return jac;
}

Ellipsoid build_ellipsoid(const CMatrix& jacobian, const Vec3& sigma_xyz, double eps_rel) {
  if ((sigma_xyz.array() < 0.0).any())
    throw std::invalid_argument("position variances must be nonnegative");
  Ellipsoid e;
  e.phi = jacobian * sigma_xyz.asDiagonal() * jacobian.adjoint();
  e.phi = 0.5 * (e.phi + e.phi.adjoint());
  e.phi_inv = regularized_inverse(e.phi, eps_rel);
  return e;
}

UncertaintySpec build_uncertainty(const Scene& scene, const PinchLayout& layout,
                                  const Vec3& sigma_xyz, double eps_rel) {
  UncertaintySpec unc;
  unc.sigma_xyz = sigma_xyz;
  unc.eps_rel = eps_rel;
  unc.est_eve_positions = scene.eves;
  for (const Vec3& eve : scene.eves) {
    CMatrix jac = channel_jacobian(scene, layout, eve);
    Ellipsoid e = build_ellipsoid(jac, sigma_xyz, eps_rel);
    unc.jacobians.push_back(std::move(jac));
    unc.phi.push_back(std::move(e.phi));
    unc.phi_inv.push_back(std::move(e.phi_inv));
  }
  return unc;
}

CMatrix interference_covariance(const Solution& sol, int i) {
  CMatrix q = sol.an_cov;
  for (Eigen::Index m = 0; m < sol.beams.cols(); ++m)
    if (m != i) q += sol.beams.col(m) * sol.beams.col(m).adjoint();
  return q;
}

CMatrix lmi_matrix(const CMatrix& q, const CVector& h_hat, const CMatrix& phi_inv, double tau,
                   double lam, double noise_eve, LmiForm form) {
  const Eigen::Index n = q.rows();
  const double sign = form == LmiForm::Sound ? 1.0 : -1.0;
  CMatrix m(n + 1, n + 1);
  const CVector qh = q * h_hat;
  m.topLeftCorner(n, n) = q + sign * tau * phi_inv;
  m.topRightCorner(n, 1) = qh;
  m.bottomLeftCorner(1, n) = qh.adjoint();
  m(n, n) = h_hat.dot(qh).real() + noise_eve - lam - sign * tau;
  return m;
}

double worst_case_denominator_oracle(const CMatrix& q, const CVector& h_hat, const CMatrix& phi,
                                     double noise_eve, int samples, std::mt19937_64& rng) {
  const Eigen::Index n = h_hat.size();
  const CMatrix root = hermitian_sqrt(phi);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    CVector u(n);
    for (Eigen::Index j = 0; j < n; ++j) u(j) = Complex(gauss(rng), gauss(rng));
    double radius = 1.0;
    if (s % 2 == 1) radius = std::pow(unit(rng), 1.0 / (2.0 * static_cast<double>(n)));
    u *= radius / u.norm();
    const CVector h = h_hat + root * u;
    best = std::min(best, h.dot(q * h).real() + noise_eve);
  }
  return best;
}

Vec3 sample_position_offset(const Vec3& sigma_xyz, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  int active = 0;
  Vec3 dir = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    if (sigma_xyz(a) > 0.0) {
      dir(a) = gauss(rng);
      ++active;
    }
  }
  if (active == 0) return Vec3::Zero();
  const double radius = std::pow(unit(rng), 1.0 / active) / dir.norm();
  Vec3 out = Vec3::Zero();
  for (int a = 0; a < 3; ++a) out(a) = dir(a) * radius * std::sqrt(sigma_xyz(a));
  return out;
}

}  // namespace pinchsec
