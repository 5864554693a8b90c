#include "pinchsec/singlewg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pinchsec {
namespace {

constexpr double kGridStepFraction = 5e-6;

struct Geometry {
  double xb, yb, xe, ye, d, eta;
};

Geometry geometry(const Scene& scene) {
  return {scene.bobs[0].x(), scene.bobs[0].y(), scene.eves[0].x(), scene.eves[0].y(),
          scene.height,      path_gain(scene.carrier)};
}

double quadratic_roots(double b, double c, std::vector<double>& out) {
  // x^2 + b x + c = 0
  const double disc = b * b - 4.0 * c;
  const double tol = 1e-12 * (b * b + std::abs(c));
  if (disc < -tol) return disc;
  const double s = std::sqrt(std::max(disc, 0.0));
  const double r1 = b >= 0.0 ? (-b - s) / 2.0 : (-b + s) / 2.0;
  out.push_back(r1);
  out.push_back(r1 != 0.0 ? c / r1 : -b - r1);
  return disc;
}

double polish(const QuarticCoeffs& c, double x) {
  for (int it = 0; it < 8; ++it) {
    const double f = c.evaluate(x);
    const double df = ((4.0 * c.a4 * x + 3.0 * c.a3) * x + 2.0 * c.a2) * x + c.a1;
    if (df == 0.0) break;
    const double next = x - f / df;
    if (!(std::abs(c.evaluate(next)) < std::abs(f))) break;
    x = next;
  }
  return x;
}

// Dense grid argmax followed by golden-section refinement of the best cell.
PositionResult grid_search(const Scene& scene, double w_power, double an_power) {
  const double side = scene.side;
  const double step = kGridStepFraction * side;
  const auto count = static_cast<long>(std::ceil(side / step));
  PositionResult best{0.0, single_wg_secrecy_rate(scene, 0.0, w_power, an_power)};
  for (long j = 1; j <= count; ++j) {
    const double x = std::min(side, static_cast<double>(j) * step);
    const double sr = single_wg_secrecy_rate(scene, x, w_power, an_power);
    if (sr > best.sr) best = {x, sr};
  }
  double lo = std::max(0.0, best.x_p - step);
  double hi = std::min(side, best.x_p + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (single_wg_secrecy_rate(scene, a, w_power, an_power) >=
        single_wg_secrecy_rate(scene, b, w_power, an_power))
      hi = b;
    else
      lo = a;
  }
  const double x = 0.5 * (lo + hi);
  const double sr = single_wg_secrecy_rate(scene, x, w_power, an_power);
  if (sr > best.sr) best = {x, sr};
  return best;
}

}  // namespace

QuarticCoeffs QuarticCoeffs::from_polynomial(double c4, double c3, double c2, double c1,
                                             double c0) {
  QuarticCoeffs q;
  q.a4 = c4;
  q.a3 = c3;
  q.a2 = c2;
  q.a1 = c1;
  q.a0 = -c0;
  return q;
}

double QuarticCoeffs::evaluate(double x) const {
  return (((a4 * x + a3) * x + a2) * x + a1) * x - a0;
}

double QuarticCoeffs::residual_bound() const { return 1e-6 * std::max(1.0, std::abs(a0)); }

void require_single_waveguide(const Scene& scene) {
  if (scene.num_waveguides != 1 || scene.pas_per_waveguide != 1 || scene.num_bobs() != 1 ||
      scene.num_eves() != 1)
    throw std::invalid_argument("single-waveguide solver needs N = M = I = K = 1");
}

double single_wg_secrecy_rate(const Scene& scene, double x, double w_power, double an_power) {
  const Geometry g = geometry(scene);
  const double rb2 = (x - g.xb) * (x - g.xb) + g.yb * g.yb + g.d * g.d;
  const double re2 = (x - g.xe) * (x - g.xe) + g.ye * g.ye + g.d * g.d;
  const double sb = g.eta * w_power / (g.eta * an_power + scene.noise_bob * rb2);
  const double se = g.eta * w_power / (g.eta * an_power + scene.noise_eve * re2);
  return std::max(0.0, std::log2(1.0 + sb) - std::log2(1.0 + se));
}

double secrecy_rate_fixed_position(const Scene& scene, double x, double an_power) {
  const Geometry g = geometry(scene);
  const double rb2 = (x - g.xb) * (x - g.xb) + g.yb * g.yb + g.d * g.d;
  const double re2 = (x - g.xe) * (x - g.xe) + g.ye * g.ye + g.d * g.d;
  const double p = scene.power;
  const double num = (g.eta * p + rb2 * scene.noise_bob) * (g.eta * an_power + re2 * scene.noise_eve);
  const double den = (g.eta * p + re2 * scene.noise_eve) * (g.eta * an_power + rb2 * scene.noise_bob);
  return std::log2(num / den);
}

double secrecy_rate_slope(const QuarticCoeffs& c, double x, double x_b, double x_e) {
  const double a = x * x - 2.0 * x_b * x + c.k2;
  const double b = x * x - 2.0 * x_e * x + c.k3;
  return (x - x_b) / (a * a + c.k1 * a) - (x - x_e) / (b * b + c.k1 * b);
}

QuarticCoeffs quartic_coefficients(const Scene& scene, double w_power, double an_power) {
  const Geometry g = geometry(scene);
  QuarticCoeffs c;
  c.k1 = w_power * g.eta / scene.noise_bob;
  c.k2 = g.xb * g.xb + g.yb * g.yb + g.d * g.d + g.eta * an_power / scene.noise_bob;
  c.k3 = g.xe * g.xe + g.ye * g.ye + g.d * g.d + g.eta * an_power / scene.noise_eve;
  const double xb = g.xb, xe = g.xe, k1 = c.k1, k2 = c.k2, k3 = c.k3;
  c.a4 = 3.0 * xe - 3.0 * xb;
  c.a3 = 4.0 * xb * xb - 4.0 * xe * xe + 2.0 * k2 - 2.0 * k3;
  c.a2 = k1 * xe - k1 * xb - 4.0 * k2 * xb + 2.0 * k3 * xb - 2.0 * k2 * xe + 4.0 * k3 * xe +
         4.0 * xe * xe * xb - 4.0 * xb * xb * xe;
  c.a1 = k2 * k2 - k3 * k3 + k1 * k2 - k1 * k3 + 4.0 * k2 * xb * xe - 4.0 * k3 * xb * xe;
  // Constant term of (x - x_e) A (A + K1) - (x - x_b) B (B + K1), negated.
  c.a0 = k2 * k2 * xe + k1 * k2 * xe - k3 * k3 * xb - k1 * k3 * xb;
  return c;
}

double solve_depressed_cubic(double b1, double b0) {
  const double disc = (b0 / 2.0) * (b0 / 2.0) + (b1 / 3.0) * (b1 / 3.0) * (b1 / 3.0);
  double z = 0.0;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    z = std::cbrt(-b0 / 2.0 + s) + std::cbrt(-b0 / 2.0 - s);
  } else {
    const double rho = std::sqrt(-(b1 / 3.0) * (b1 / 3.0) * (b1 / 3.0));
    const double arg = std::clamp((-b0 / 2.0) / rho, -1.0, 1.0);
    const double theta = std::acos(arg);
    z = 2.0 * std::sqrt(-b1 / 3.0) * std::cos(theta / 3.0);
  }
  // One Newton step removes the cancellation error of the Cardano sum.
  const double f = (z * z + b1) * z + b0;
  const double df = 3.0 * z * z + b1;
  if (df != 0.0) {
    const double next = z - f / df;
    if (std::abs((next * next + b1) * next + b0) < std::abs(f)) z = next;
  }
  return z;
}

std::vector<double> solve_quartic(const QuarticCoeffs& c) {
  if (c.a4 == 0.0) throw DegenerateOrderError("quartic leading coefficient is zero");
  const double b = c.a3 / c.a4;
  const double cc = c.a2 / c.a4;
  const double d = c.a1 / c.a4;
  const double e = -c.a0 / c.a4;
  const double shift = -b / 4.0;

  // u^4 + p u^2 + q u + r = 0 with x = u - b/4
  const double p = cc - 3.0 * b * b / 8.0;
  const double q = d - b * cc / 2.0 + b * b * b / 8.0;
  const double r = e - b * d / 4.0 + b * b * cc / 16.0 - 3.0 * b * b * b * b / 256.0;

  std::vector<double> u;
  const double scale = std::max({1.0, std::abs(p), std::sqrt(std::abs(r))});
  bool biquadratic = std::abs(q) <= 1e-14 * scale * std::sqrt(scale);
  if (!biquadratic) {
    // Resolvent l^3 + beta2 l^2 + beta1 l + beta0 = 0 in l = omega^2.
    const double beta2 = 4.0 * r - p * p;
    const double beta1 = -2.0 * p * q * q;
    const double beta0 = -q * q * q * q;
    const double b1p = beta1 - beta2 * beta2 / 3.0;
    const double b0p = 2.0 * beta2 * beta2 * beta2 / 27.0 - beta1 * beta2 / 3.0 + beta0;
    const double l = solve_depressed_cubic(b1p, b0p) - beta2 / 3.0;
    if (l > 0.0) {
      const double omega = std::sqrt(l);
      const double p1 = q / omega;
      const double p0 = 0.5 * (p - omega + q * q / l);
      const double q0 = omega + p0;
      quadratic_roots(p1, p0, u);
      quadratic_roots(-p1, q0, u);
    } else {
      biquadratic = true;
    }
  }
  if (biquadratic) {
    std::vector<double> y;
    quadratic_roots(p, r, y);
    for (double v : y) {
      if (v >= 0.0) {
        u.push_back(std::sqrt(v));
        u.push_back(-std::sqrt(v));
      } else if (v > -1e-12 * scale) {
        u.push_back(0.0);
      }
    }
  }

  std::vector<double> roots;
  for (double v : u) {
    const double x = polish(c, v + shift);
    if (std::abs(c.evaluate(x)) <= c.residual_bound()) roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double x, double y) {
                            return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x));
                          }),
              roots.end());
  return roots;
}

PositionResult optimal_pa_position(const Scene& scene, double w_power, double an_power) {
  require_single_waveguide(scene);
  if (!(w_power > 0.0)) return {0.0, 0.0};
  const Geometry g = geometry(scene);
  const bool equal_noise =
      std::abs(scene.noise_bob - scene.noise_eve) <= 1e-12 * scene.noise_bob;
  const bool degenerate = std::abs(g.xe - g.xb) <= 1e-12 * scene.side;
  // With unequal noise the stationarity condition is quintic rather than
  // quartic; both it and the a4 = 0 case go through the dense grid.
  if (!equal_noise || degenerate) return grid_search(scene, w_power, an_power);

  std::vector<double> candidates{0.0, scene.side};
  for (double root : solve_quartic(quartic_coefficients(scene, w_power, an_power)))
    candidates.push_back(std::clamp(root, 0.0, scene.side));
  std::sort(candidates.begin(), candidates.end());
  PositionResult best{candidates.front(), -1.0};
  for (double x : candidates) {
    const double sr = single_wg_secrecy_rate(scene, x, w_power, an_power);
    if (sr > best.sr) best = {x, sr};
  }
  return best;
}

PowerSplit optimal_power_split(const Scene& scene, double x_p) {
  require_single_waveguide(scene);
  const Geometry g = geometry(scene);
  const double rb2 = (x_p - g.xb) * (x_p - g.xb) + g.yb * g.yb + g.d * g.d;
  const double re2 = (x_p - g.xe) * (x_p - g.xe) + g.ye * g.ye + g.d * g.d;
  if (rb2 * scene.noise_bob > re2 * scene.noise_eve) return {0.0, scene.power};
  return {scene.power, 0.0};
}

AlternateResult alternate_optimize(const Scene& scene, const AlternateOptions& opts) {
  require_single_waveguide(scene);
  scene.validate();
  AlternateResult out;
  SingleWgState& st = out.state;
  st.x_p = std::clamp(opts.init_x.value_or(scene.bobs[0].x()), 0.0, scene.side);
  st.an_power = std::clamp(opts.init_an.value_or(0.0), 0.0, scene.power);
  st.w_power = scene.power - st.an_power;
  st.sr = single_wg_secrecy_rate(scene, st.x_p, st.w_power, st.an_power);

  for (int it = 0; it < opts.max_iters; ++it) {
    const double prev = st.sr;
    const PositionResult pos = optimal_pa_position(scene, st.w_power, st.an_power);
    // Keep the incumbent position unless the candidate strictly improves it.
    if (pos.sr > single_wg_secrecy_rate(scene, st.x_p, st.w_power, st.an_power)) st.x_p = pos.x_p;
    const PowerSplit split = optimal_power_split(scene, st.x_p);
    st.w_power = split.w_power;
    st.an_power = split.an_power;
    st.sr = single_wg_secrecy_rate(scene, st.x_p, st.w_power, st.an_power);
    out.sr_trace.push_back(st.sr);
    out.iterations = it + 1;
    if (std::abs(st.sr - prev) < opts.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace pinchsec
