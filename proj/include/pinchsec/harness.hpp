#pragma once

// Scenario generation, Monte-Carlo drivers and file formats.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pinchsec/optimizer.hpp"
#include "pinchsec/singlewg.hpp"

namespace pinchsec {

// Template with the default experimental constants: D = 5 m, d = 2 m,
// -90 dBm noise, 28 GHz, neff = 1.4, N = 2, M = 4, P = 0 dBm, Delta = lambda/2.
Scene default_scene();

struct ExperimentConfig {
  Scene base = default_scene();
  int num_bobs = 1;
  int num_eves = 1;
  // power | side | bobs | eves | sigma2 | waveguides | pas
  std::string axis = "power";
  std::vector<double> values = {0.0};
  int mc = 20;
  std::uint64_t seed = 0;
  TrainConfig train;
  // Also run every scenario with the AN covariance forced to zero.
  bool paired_no_an = false;
  // Robust mode: true Eve positions drawn per scenario for evaluation.
  bool evaluate_true_eves = true;
  int threads = 1;
};

// Per-scenario RNG stream derived from (seed, index).
std::mt19937_64 scenario_rng(std::uint64_t seed, std::uint64_t index);

// Bob and Eve x, y uniform on [0, D]^2, z = 0; draws with two users closer
// than 1e-6 m are rejected.
Scene sample_scene(const Scene& base, int num_bobs, int num_eves, std::mt19937_64& rng);

struct ScenarioResult {
  int index = 0;
  double sr = 0.0;        // clamped SR, or clamped worst-case SR in robust mode
  double sr_true = 0.0;   // robust mode: clamped SR at the drawn true Eve positions
  double sr_no_an = 0.0;  // paired run without AN
  double pen3 = 0.0;
  bool feasible = false;
  std::vector<double> trace;
};

struct CdfPoint {
  double value = 0.0;
  double quantile = 0.0;
};

struct McAggregate {
  std::vector<double> values;
  double mean = 0.0;
  std::vector<CdfPoint> cdf;
  std::vector<double> mean_trace;

  static McAggregate from(const std::vector<double>& values,
                          const std::vector<std::vector<double>>& traces = {});
  // Empirical quantile (linear interpolation between order statistics).
  double quantile(double q) const;
};

struct SweepPoint {
  double value = 0.0;
  std::vector<ScenarioResult> scenarios;
  McAggregate sr;
  McAggregate sr_true;
  McAggregate sr_no_an;
};

// Applies one sweep value to a copy of the config.
ExperimentConfig apply_axis(const ExperimentConfig& config, const std::string& axis, double value);

// Solves one scenario: closed form when N = M = I = K = 1, training otherwise.
ScenarioResult run_scenario(const ExperimentConfig& config, int index);

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config);

struct HeatmapCell {
  double x = 0.0;
  double y = 0.0;
  double sr = 0.0;
};

// Bob moved over an R x R grid spanning [0, D]^2 with the given Eves fixed.
std::vector<HeatmapCell> run_heatmap(const ExperimentConfig& config, int resolution,
                                     const std::vector<Vec3>& eves);

// --------------------------------------------------------------------- csv

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
  std::vector<double> numeric_row(std::size_t r) const;
};

std::string format_number(double v);
void emit_csv(const CsvTable& table, const std::string& path);
CsvTable parse_csv(const std::string& path);

CsvTable trace_table(const std::vector<EpochRecord>& trace);
CsvTable sweep_table(const std::vector<SweepPoint>& points, const std::string& axis);
CsvTable heatmap_table(const std::vector<HeatmapCell>& cells);
CsvTable cdf_table(const McAggregate& agg);

// ------------------------------------------------------------------ config

// Flat "key = value" lines with '#' comments.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

// --------------------------------------------------------------- gradcheck

struct GradcheckEntry {
  std::string name;
  int checked = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradcheckOptions {
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_floor = 1e-8;
  // Loss graphs: base step of a three-level Richardson extrapolation of
  // central differences (the phase terms make plain h = 1e-5 differences
  // roundoff limited).
  double loss_step = 1e-4;
  std::uint64_t seed = 0;
  std::vector<int> loss_hidden = {16, 16, 16, 16};
  // Networks whose hidden pre-activations come closer than this to the ReLU
  // kink are redrawn.
  double kink_margin = 1e-3;
};

// Central finite differences against backward for every operation kind and
// for the full perfect and robust loss graphs (unit penalty weights) over all
// network parameters.
std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions& options = {});
CsvTable gradcheck_table(const std::vector<GradcheckEntry>& entries);

}  // namespace pinchsec
