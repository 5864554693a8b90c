#pragma once

// Online neural optimizer: a fully connected network maps the user and
// eavesdropper coordinates of one scene to beams, AN covariance, PA positions
// and (robust mode) the S-procedure auxiliaries, and is trained on that scene
// alone with Adam against a penalized secrecy objective.

#include <cstdint>
#include <optional>
#include <vector>

#include "pinchsec/autodiff.hpp"
#include "pinchsec/channel.hpp"
#include "pinchsec/metrics.hpp"
#include "pinchsec/robust.hpp"

namespace pinchsec {

enum class TrainMode { Perfect, Robust };

// Within: consecutive PAs on the same waveguide. Across: same PA index on
// consecutive waveguides.
enum class SpacingForm { Within, Across };

struct NetworkConfig {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<int> hidden = {256, 256, 256, 256};
  std::uint64_t seed = 0;

  static int output_dim_for(const Scene& scene, TrainMode mode);
  static NetworkConfig for_scene(const Scene& scene, TrainMode mode,
                                 std::vector<int> hidden = {256, 256, 256, 256},
                                 std::uint64_t seed = 0);
};

// Parameters stored as [W0, b0, W1, b1, ...]; W_l is out x in, b_l is out x 1.
struct Mlp {
  std::vector<ad::Tensor> params;

  static Mlp init(const NetworkConfig& config);
  int num_layers() const { return static_cast<int>(params.size() / 2); }
  std::size_t num_parameters() const;
  // Plain evaluation without a tape.
  ad::Tensor forward(const ad::Tensor& input) const;
};

ad::Var mlp_forward(ad::Tape& tape, const std::vector<ad::Var>& params, ad::Var input);

// Coordinates of every Bob then every Eve, (x, y) / D, as a column.
ad::Tensor scene_features(const Scene& scene);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

void adam_step(std::vector<ad::Tensor>& params, const std::vector<ad::Tensor>& grads,
               AdamState& state, double lr);

struct PenaltyWeights {
  double u1 = 0.0;
  double u2 = 0.0;
  double u3 = 0.0;
};

double initial_power_penalty(double power_dbm);
double lmi_penalty_weight(double sigma2);
PenaltyWeights penalty_schedule(int epoch, double power_dbm, double sigma2);

struct TrainConfig {
  int epochs = 1500;
  double lr0 = 1e-4;
  double lr_decay = 0.2;
  int lr_step = 200;
  TrainMode mode = TrainMode::Perfect;
  bool an_enabled = true;
  NumeratorMode numerator = NumeratorMode::Conservative;
  LmiForm lmi = LmiForm::Sound;
  SpacingForm spacing = SpacingForm::Within;
  Vec3 sigma_xyz = Vec3(0.05, 0.05, 0.0);
  double eps_rel = kDefaultEpsRel;
  std::vector<int> hidden = {256, 256, 256, 256};
  std::uint64_t seed = 0;
  // Beam outputs are multiplied by beam_gain * sqrt(P), the G block of the AN
  // covariance by an_gain * sqrt(P).
  bool scale_outputs = true;
  double beam_gain = 1.0;
  double an_gain = 1.0;
  // When positive, train_scenario picks the gains so that the initial network
  // decodes to these fractions of the power budget.
  double init_beam_fraction = 0.95;
  double init_an_fraction = 0.001;
  // Position logits are multiplied by this before the sigmoid. With a single
  // PA the objective varies on the metre scale instead of the wavelength
  // scale, and train_scenario uses single_pa_position_gain instead.
  double position_gain = 1.0;
  double single_pa_position_gain = 20.0;
  // Decoded auxiliaries at zero logits, as multiples of sigma_E^2. lambda + tau
  // below sigma_E^2 keeps the initial LMI satisfiable.
  double tau_init = 0.1;
  double lambda_init = 0.5;
  // Largest mean LMI violation (noise units) accepted as feasible.
  double lmi_tol = 1e-4;

  double learning_rate(int epoch) const;
};

// Tape view of a decoded network output.
struct DecodedVars {
  ad::CVar beams;                // N x I
  std::optional<ad::CVar> gram;  // G, N x N; absent without AN
  ad::Var positions;             // N x M, rows ascending
  std::optional<ad::Var> tau;    // K x I, watts
  std::optional<ad::Var> lam;    // K x I, watts
};

DecodedVars decode_outputs(ad::Tape& tape, ad::Var raw, const Scene& scene,
                           const TrainConfig& config);
Solution decode_solution(const ad::Tensor& raw, const Scene& scene, const TrainConfig& config);
// Reads the decoded tape values back into a Solution.
Solution to_solution(const DecodedVars& dec, const Scene& scene);

// Channel vector (N x 1) of a receiver for PA positions living on the tape.
ad::CVar tape_channel(ad::Tape& tape, ad::Var positions, const Scene& scene,
                      const Vec3& receiver);

struct LossTerms {
  ad::Var loss;
  ad::Var sr;    // unclamped min over pairs
  ad::Var pen1;  // power
  ad::Var pen2;  // spacing
  ad::Var pen3;  // LMI, noise units; 0 in perfect mode
};

LossTerms loss_perfect(ad::Tape& tape, const DecodedVars& dec, const Scene& scene,
                       const PenaltyWeights& u, SpacingForm spacing = SpacingForm::Within);
LossTerms loss_robust(ad::Tape& tape, const DecodedVars& dec, const Scene& scene,
                      const PenaltyWeights& u, const TrainConfig& config);

// Same formulas evaluated on a fixed Solution; used for reporting and tests.
double power_penalty(const Solution& sol, const Scene& scene);
double spacing_penalty(const PinchLayout& layout, const Scene& scene, SpacingForm form);
// Mean over (k, i) of relu(-lambda_min(M_{k,i} / sigma_E^2)).
double lmi_penalty(const Solution& sol, const Scene& scene, const UncertaintySpec& unc,
                   LmiForm form);

// Scales W and R_m onto the power budget (and the auxiliaries so that every
// LMI is scaled by the same positive factor). No-op when within budget.
Solution project_to_budget(const Solution& sol, const Scene& scene);

struct EpochRecord {
  int epoch = 0;
  double sr = 0.0;
  double loss = 0.0;
  double pen1 = 0.0;
  double pen2 = 0.0;
  double pen3 = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Solution solution;
  // Perfect: clamped SR. Robust: worst-case objective (unclamped).
  double sr = 0.0;
  double pen3 = 0.0;
  int best_epoch = -1;
  bool feasible = false;
  std::vector<EpochRecord> trace;
};

// Objective used for selection and reporting.
double evaluate_solution(const Solution& sol, const Scene& scene, const TrainConfig& config,
                         double* pen3 = nullptr);

// Sets beam_gain and an_gain from the initial raw output.
void calibrate_gains(const ad::Tensor& raw, const Scene& scene, TrainConfig& config);

TrainResult train_scenario(const Scene& scene, const TrainConfig& config_in);

}  // namespace pinchsec
