#pragma once

#include <Eigen/Dense>

#include "pinchsec/channel.hpp"
#include "pinchsec/robust.hpp"

namespace pinchsec {

struct Solution {
  CMatrix beams;   // W, N x I
  CMatrix an_cov;  // R_m, N x N
  PinchLayout layout;
  Eigen::MatrixXd aux_lambda;  // K x I, robust mode only
  Eigen::MatrixXd aux_tau;     // K x I, robust mode only

  bool has_aux() const { return aux_lambda.size() > 0; }
  double total_power() const;
};

// Throws std::invalid_argument if R_m is not PSD, the budget is exceeded or
// auxiliaries are out of range.
void check_solution(const Solution& sol, const Scene& scene);

enum class NumeratorMode { Conservative, Nominal };

// log2(1 + |h^H w_i|^2 / (sum_{m != i} |h^H w_m|^2 + h^H R_m h + noise))
double rate_for_channel(const CVector& h, const Solution& sol, int i, double noise);
double rate_bob(const ChannelSet& ch, const Solution& sol, int i, double noise_bob);
double rate_eve(const ChannelSet& ch, const Solution& sol, int k, int i, double noise_eve);

// K x I matrix of R_{B,i} - R_{E,k,i}.
Eigen::MatrixXd secrecy_gaps(const ChannelSet& ch, const Solution& sol, const Scene& scene);
// min over (i, k) of [R_{B,i} - R_{E,k,i}]^+
double secrecy_rate(const ChannelSet& ch, const Solution& sol, const Scene& scene);

double worst_case_numerator(const CVector& h_hat, const CVector& w, const CMatrix& phi,
                            NumeratorMode mode);

// min over (i, k) of R_{B,i} - log2(1 + num / lambda_{k,i}); no clamp unless
// requested.
double robust_secrecy_rate(const ChannelSet& channels_hat, const Solution& sol,
                           const Scene& scene, const UncertaintySpec& unc, NumeratorMode mode,
                           bool clamp = false);

}  // namespace pinchsec
