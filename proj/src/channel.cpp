#include "pinchsec/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pinchsec {
namespace {

void check_receiver(const Vec3& p, double side, const char* who, std::size_t idx) {
  const bool ok = p.z() == 0.0 && p.x() >= 0.0 && p.x() <= side && p.y() >= 0.0 &&
                  p.y() <= side && p.allFinite();
  if (!ok)
    throw std::invalid_argument(std::string(who) + " " + std::to_string(idx) +
                                " must lie on the floor square [0, D]^2 x {0}");
}

}  // namespace

void Scene::validate() const {
  if (!(side > 0.0)) throw std::invalid_argument("side D must be positive");
  if (!(height > 0.0)) throw std::invalid_argument("height d must be positive");
  if (num_waveguides < 1) throw std::invalid_argument("need at least one waveguide");
  if (pas_per_waveguide < 1) throw std::invalid_argument("need at least one PA per waveguide");
  if (bobs.empty()) throw std::invalid_argument("need at least one Bob");
  if (eves.empty()) throw std::invalid_argument("need at least one Eve");
  for (std::size_t i = 0; i < bobs.size(); ++i) check_receiver(bobs[i], side, "Bob", i);
  for (std::size_t k = 0; k < eves.size(); ++k) check_receiver(eves[k], side, "Eve", k);
  if (!(noise_bob > 0.0) || !(noise_eve > 0.0))
    throw std::invalid_argument("noise variances must be positive");
  if (!(power > 0.0)) throw std::invalid_argument("power budget must be positive");
  if (!(carrier > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
  if (!(neff >= 1.0)) throw std::invalid_argument("effective refractive index must be >= 1");
  if (!(min_spacing >= 0.0)) throw std::invalid_argument("min spacing must be >= 0");
}

double free_space_wavelength(double carrier) {
  if (!(carrier > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
  return kSpeedOfLight / carrier;
}

double guided_wavelength(double carrier, double neff) {
  if (!(neff >= 1.0)) throw std::invalid_argument("effective refractive index must be >= 1");
  return free_space_wavelength(carrier) / neff;
}

double path_gain(double carrier) {
  const double lambda = free_space_wavelength(carrier);
  const double r = lambda / (4.0 * kPi);
  return r * r;
}

PinchLayout make_layout(const Scene& scene, Eigen::MatrixXd x) {
  if (x.rows() != scene.num_waveguides || x.cols() != scene.pas_per_waveguide)
    throw std::invalid_argument("layout shape must be N x M");
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    auto row = x.row(n);
    std::sort(row.begin(), row.end());
    for (Eigen::Index m = 0; m < x.cols(); ++m)
      if (!(x(n, m) >= 0.0 && x(n, m) <= scene.side))
        throw std::invalid_argument("PA position outside [0, D]");
  }
  PinchLayout layout;
  layout.x = std::move(x);
  layout.waveguide_y.resize(scene.num_waveguides);
  for (int n = 0; n < scene.num_waveguides; ++n)
    layout.waveguide_y(n) = n * scene.side / scene.num_waveguides;
  layout.feed_x = scene.feed_x;
  layout.height = scene.height;
  return layout;
}

PinchLayout uniform_layout(const Scene& scene) {
  Eigen::MatrixXd x(scene.num_waveguides, scene.pas_per_waveguide);
  for (int n = 0; n < scene.num_waveguides; ++n)
    for (int m = 0; m < scene.pas_per_waveguide; ++m)
      x(n, m) = (m + 0.5) * scene.side / scene.pas_per_waveguide;
  return make_layout(scene, std::move(x));
}

Complex inwaveguide_coeff(const PinchLayout& layout, int n, int m, double carrier,
                          double neff) {
  if (n < 0 || n >= layout.num_waveguides() || m < 0 || m >= layout.pas_per_waveguide())
    throw std::out_of_range("PA index out of range");
  const double lg = guided_wavelength(carrier, neff);
  const double dist = std::abs(layout.x(n, m) - layout.feed_x);
  const double amp = 1.0 / std::sqrt(static_cast<double>(layout.pas_per_waveguide()));
  return amp * std::polar(1.0, -2.0 * kPi * dist / lg);
}

Complex freespace_coeff(const Vec3& receiver, const Vec3& pa, double carrier) {
  const double r = (receiver - pa).norm();
  if (!(r > 0.0)) throw SingularityError("receiver coincides with a pinching antenna");
  const double lambda = free_space_wavelength(carrier);
  return std::sqrt(path_gain(carrier)) * std::polar(1.0, -2.0 * kPi * r / lambda) / r;
}

CVector channel_vector(const Scene& scene, const PinchLayout& layout, const Vec3& receiver) {
  const int n_wg = layout.num_waveguides();
  const int m_pa = layout.pas_per_waveguide();
  CVector h = CVector::Zero(n_wg);
  for (int n = 0; n < n_wg; ++n)
    for (int m = 0; m < m_pa; ++m)
      h(n) += freespace_coeff(receiver, layout.pa_position(n, m), scene.carrier) *
              inwaveguide_coeff(layout, n, m, scene.carrier, scene.neff);
  return h;
}

ChannelSet channel_matrices(const Scene& scene, const PinchLayout& layout) {
  ChannelSet out;
  out.bob.resize(scene.num_bobs(), layout.num_waveguides());
  out.eve.resize(scene.num_eves(), layout.num_waveguides());
  for (int i = 0; i < scene.num_bobs(); ++i)
    out.bob.row(i) = channel_vector(scene, layout, scene.bobs[i]).transpose();
  for (int k = 0; k < scene.num_eves(); ++k)
    out.eve.row(k) = channel_vector(scene, layout, scene.eves[k]).transpose();
  return out;
}

}  // namespace pinchsec
