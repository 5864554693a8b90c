#pragma once

// Imperfect eavesdropper CSI: position error mapped through the channel
// Jacobian into an ellipsoid in channel space, and the S-procedure LMI that
// lower-bounds Eve's SINR denominator over that ellipsoid.

#include <random>
#include <vector>

#include "pinchsec/channel.hpp"
#include "pinchsec/numerics.hpp"

namespace pinchsec {

struct Solution;

// Sign convention of the S-procedure multiplier.
//   Sound:    [[Q + tau Phi^-1, Q h], [h^H Q, h^H Q h + s - lam - tau]]
//   Printed:  [[Q - tau Phi^-1, Q h], [h^H Q, h^H Q h + s - lam + tau]]
// Only Sound certifies the denominator bound inside the ellipsoid; Printed is
// kept for reproducing published numbers.
enum class LmiForm { Sound, Printed };

struct UncertaintySpec {
  Vec3 sigma_xyz = Vec3::Zero();  // variances of the position error, m^2
  double eps_rel = kDefaultEpsRel;
  std::vector<Vec3> est_eve_positions;
  std::vector<CMatrix> jacobians;  // N x 3 per Eve
  std::vector<CMatrix> phi;        // J Sigma J^H
  std::vector<CMatrix> phi_inv;    // regularized inverse
};

struct Ellipsoid {
  CMatrix phi;
  CMatrix phi_inv;
};

// dh/dp at the Eve position, N x 3.
CMatrix channel_jacobian(const Scene& scene, const PinchLayout& layout, const Vec3& eve);

Ellipsoid build_ellipsoid(const CMatrix& jacobian, const Vec3& sigma_xyz,
                          double eps_rel = kDefaultEpsRel);

// Uses scene.eves as the estimated positions.
UncertaintySpec build_uncertainty(const Scene& scene, const PinchLayout& layout,
                                  const Vec3& sigma_xyz, double eps_rel = kDefaultEpsRel);

// Q_{k,i} = R_m + sum_{m != i} w_m w_m^H (independent of k).
CMatrix interference_covariance(const Solution& sol, int i);

CMatrix lmi_matrix(const CMatrix& q, const CVector& h_hat, const CMatrix& phi_inv, double tau,
                   double lam, double noise_eve, LmiForm form = LmiForm::Sound);

// Monte-Carlo minimum of (h + dh)^H Q (h + dh) + noise over dh = Phi^{1/2} u,
// |u| <= 1. Half of the samples lie on the boundary.
double worst_case_denominator_oracle(const CMatrix& q, const CVector& h_hat, const CMatrix& phi,
                                     double noise_eve, int samples, std::mt19937_64& rng);

// Uniform draw inside {dp : dp^T Sigma^-1 dp <= 1}; axes with zero variance stay 0.
Vec3 sample_position_offset(const Vec3& sigma_xyz, std::mt19937_64& rng);

}  // namespace pinchsec
