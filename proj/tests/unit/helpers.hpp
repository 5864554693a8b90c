#pragma once

#include <random>

#include "pinchsec/harness.hpp"

namespace testutil {

inline pinchsec::Scene random_scene(std::uint64_t seed, int n, int m, int bobs, int eves) {
  pinchsec::Scene base = pinchsec::default_scene();
  base.num_waveguides = n;
  base.pas_per_waveguide = m;
  std::mt19937_64 rng(seed);
  return pinchsec::sample_scene(base, bobs, eves, rng);
}

inline pinchsec::PinchLayout random_layout(const pinchsec::Scene& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, s.side);
  Eigen::MatrixXd x(s.num_waveguides, s.pas_per_waveguide);
  for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = u(rng);
  return pinchsec::make_layout(s, x);
}

inline pinchsec::CMatrix random_cmatrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  pinchsec::CMatrix a(r, c);
  for (Eigen::Index j = 0; j < a.size(); ++j) a.data()[j] = {g(rng), g(rng)};
  return a;
}

inline pinchsec::CMatrix random_psd(int n, std::mt19937_64& rng, double scale = 1.0) {
  const pinchsec::CMatrix a = random_cmatrix(n, n, rng, scale);
  return a * a.adjoint();
}

}  // namespace testutil
