#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pinchsec/numerics.hpp"
#include "pinchsec/units.hpp"

namespace pinchsec {

using Vec3 = Eigen::Vector3d;

// Raised when a receiver coincides with a radiating antenna.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Full problem instance. SI units throughout; powers in watts.
struct Scene {
  double side = 5.0;    // D, waveguide length and room side
  double height = 2.0;  // d, waveguide mounting height
  int num_waveguides = 2;
  int pas_per_waveguide = 4;
  std::vector<Vec3> bobs;
  std::vector<Vec3> eves;
  double noise_bob = dbm_to_watt(-90.0);
  double noise_eve = dbm_to_watt(-90.0);
  double carrier = 28e9;
  double neff = 1.4;
  double power = dbm_to_watt(0.0);
  double min_spacing = 0.0;
  double feed_x = 0.0;

  int num_bobs() const { return static_cast<int>(bobs.size()); }
  int num_eves() const { return static_cast<int>(eves.size()); }

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

// PA positions x(n, m) on the fixed waveguide geometry.
struct PinchLayout {
  Eigen::MatrixXd x;            // N x M, rows sorted ascending
  Eigen::VectorXd waveguide_y;  // (n-1) D / N
  double feed_x = 0.0;
  double height = 0.0;

  int num_waveguides() const { return static_cast<int>(x.rows()); }
  int pas_per_waveguide() const { return static_cast<int>(x.cols()); }
  Vec3 pa_position(int n, int m) const { return {x(n, m), waveguide_y(n), height}; }
  Vec3 feed_position(int n) const { return {feed_x, waveguide_y(n), height}; }
};

struct ChannelSet {
  CMatrix bob;  // I x N, row i is h_{B,i}^T
  CMatrix eve;  // K x N
};

double free_space_wavelength(double carrier);
double guided_wavelength(double carrier, double neff);
// eta = c^2 / (16 pi^2 fc^2)
double path_gain(double carrier);

// Builds a layout from raw positions; rows are sorted, range [0, D] checked.
PinchLayout make_layout(const Scene& scene, Eigen::MatrixXd x);
// M PAs per waveguide evenly spread over (0, D).
PinchLayout uniform_layout(const Scene& scene);

Complex inwaveguide_coeff(const PinchLayout& layout, int n, int m, double carrier,
                          double neff);
Complex freespace_coeff(const Vec3& receiver, const Vec3& pa, double carrier);

// Per-waveguide channel vector (length N) seen by a receiver.
CVector channel_vector(const Scene& scene, const PinchLayout& layout, const Vec3& receiver);
ChannelSet channel_matrices(const Scene& scene, const PinchLayout& layout);

}  // namespace pinchsec
