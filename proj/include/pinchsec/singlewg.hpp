#pragma once

// Exact solver for one waveguide carrying one PA, one Bob and one Eve.
// The PA position maximizing SR for a fixed power split is a root of a
// quartic (solved by Ferrari's method with a Cardano resolvent); the power
// split for a fixed position is always an endpoint.

#include <optional>
#include <stdexcept>
#include <vector>

#include "pinchsec/channel.hpp"

namespace pinchsec {

class DegenerateOrderError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// a4 x^4 + a3 x^3 + a2 x^2 + a1 x - a0 = 0, plus the constants the
// coefficients are built from.
struct QuarticCoeffs {
  double a4 = 0.0, a3 = 0.0, a2 = 0.0, a1 = 0.0, a0 = 0.0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0;

  // From c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0.
  static QuarticCoeffs from_polynomial(double c4, double c3, double c2, double c1, double c0);
  double evaluate(double x) const;
  double residual_bound() const;
};

struct SingleWgState {
  double w_power = 0.0;
  double an_power = 0.0;
  double x_p = 0.0;
  double sr = 0.0;
};

struct PositionResult {
  double x_p = 0.0;
  double sr = 0.0;
};

struct PowerSplit {
  double w_power = 0.0;
  double an_power = 0.0;
};

struct AlternateOptions {
  double tol = 1e-8;
  int max_iters = 50;
  std::optional<double> init_x;   // defaults to the Bob x-coordinate
  std::optional<double> init_an;  // defaults to 0
};

struct AlternateResult {
  SingleWgState state;
  std::vector<double> sr_trace;  // SR after every iteration
  int iterations = 0;
  bool converged = false;
};

// Throws std::invalid_argument unless N = M = I = K = 1.
void require_single_waveguide(const Scene& scene);

// [R_B - R_E]^+ with the PA at (x, 0, d).
double single_wg_secrecy_rate(const Scene& scene, double x, double w_power, double an_power);

// Full-budget objective with w_power = P - an_power (not clamped).
double secrecy_rate_fixed_position(const Scene& scene, double x, double an_power);

// d SR / dx up to a positive factor; zero exactly at stationary points.
double secrecy_rate_slope(const QuarticCoeffs& c, double x, double x_b, double x_e);

QuarticCoeffs quartic_coefficients(const Scene& scene, double w_power, double an_power);

// One real root of z^3 + b1 z + b0 = 0 (the largest when three exist).
double solve_depressed_cubic(double b1, double b0);

// All real roots, ascending.
std::vector<double> solve_quartic(const QuarticCoeffs& c);

PositionResult optimal_pa_position(const Scene& scene, double w_power, double an_power);
PowerSplit optimal_power_split(const Scene& scene, double x_p);
AlternateResult alternate_optimize(const Scene& scene, const AlternateOptions& opts = {});

}  // namespace pinchsec
