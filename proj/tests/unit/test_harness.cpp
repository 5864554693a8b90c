#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pinchsec/harness.hpp"

using namespace pinchsec;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pinchsec_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

ExperimentConfig quick_config(int epochs) {
  ExperimentConfig e;
  e.train.epochs = epochs;
  e.train.hidden = {32, 32, 32, 32};
  e.mc = 2;
  return e;
}

}  // namespace

TEST_CASE("default scene constants") {
  const Scene s = default_scene();
  CHECK(s.side == 5.0);
  CHECK(s.height == 2.0);
  CHECK(s.num_waveguides == 2);
  CHECK(s.pas_per_waveguide == 4);
  CHECK(s.noise_bob == doctest::Approx(1e-12));
  CHECK(s.noise_eve == doctest::Approx(1e-12));
  CHECK(s.power == doctest::Approx(1e-3));
  CHECK(s.carrier == 28e9);
  CHECK(s.neff == 1.4);
  CHECK(s.min_spacing == doctest::Approx(299792458.0 / 28e9 / 2.0));
}

TEST_CASE("scene sampling is seeded and uniform") {
  const Scene base = default_scene();
  std::mt19937_64 a = scenario_rng(5, 3), b = scenario_rng(5, 3), c = scenario_rng(5, 4);
  const Scene sa = sample_scene(base, 2, 3, a);
  const Scene sb = sample_scene(base, 2, 3, b);
  const Scene sc = sample_scene(base, 2, 3, c);
  CHECK(sa.bobs == sb.bobs);
  CHECK(sa.eves == sb.eves);
  CHECK(sa.bobs != sc.bobs);
  REQUIRE(sa.eves.size() == 3);

  std::mt19937_64 rng(1);
  const int n = 10000;
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const Scene s = sample_scene(base, 1, 1, rng);
    CHECK(s.bobs[0].z() == 0.0);
    sum += s.bobs[0].x();
  }
  const double se = base.side / std::sqrt(12.0 * n);
  CHECK(std::abs(sum / n - base.side / 2.0) < 3.0 * se);

  Scene bad = base;
  bad.side = 0.0;
  CHECK_THROWS_AS(sample_scene(bad, 1, 1, rng), std::invalid_argument);
}

TEST_CASE("aggregate statistics") {
  const McAggregate a = McAggregate::from({3.0, 1.0, 2.0, 4.0}, {{1.0, 2.0}, {3.0, 4.0}});
  CHECK(a.mean == 2.5);
  REQUIRE(a.cdf.size() == 4);
  for (std::size_t j = 0; j < a.cdf.size(); ++j) {
    if (j > 0) {
      CHECK(a.cdf[j].value >= a.cdf[j - 1].value);
      CHECK(a.cdf[j].quantile >= a.cdf[j - 1].quantile);
    }
    CHECK(a.cdf[j].quantile > 0.0);
    CHECK(a.cdf[j].quantile <= 1.0);
  }
  CHECK(a.cdf.back().quantile == 1.0);
  CHECK(a.quantile(0.0) == 1.0);
  CHECK(a.quantile(1.0) == 4.0);
  CHECK(a.quantile(0.5) == 2.5);
  CHECK(a.mean_trace == std::vector<double>{2.0, 3.0});
  CHECK_THROWS(McAggregate::from({}).quantile(0.5));
}

TEST_CASE("sweep axes map onto the scene") {
  const ExperimentConfig e;
  CHECK(apply_axis(e, "power", 10.0).base.power == doctest::Approx(1e-2));
  CHECK(apply_axis(e, "side", 15.0).base.side == 15.0);
  CHECK(apply_axis(e, "bobs", 3.0).num_bobs == 3);
  CHECK(apply_axis(e, "eves", 6.0).num_eves == 6);
  CHECK(apply_axis(e, "waveguides", 4.0).base.num_waveguides == 4);
  CHECK(apply_axis(e, "pas", 1.0).base.pas_per_waveguide == 1);
  const ExperimentConfig s = apply_axis(e, "sigma2", 0.15);
  CHECK(s.train.sigma_xyz == Vec3(0.15, 0.15, 0.0));
  CHECK_THROWS_AS(apply_axis(e, "height", 1.0), std::invalid_argument);
}

TEST_CASE("a one-scenario sweep reduces to a single training run") {
  ExperimentConfig e = quick_config(30);
  e.mc = 1;
  e.values = {0.0};
  const std::vector<SweepPoint> pts = run_sweep(e);
  REQUIRE(pts.size() == 1);
  REQUIRE(pts[0].scenarios.size() == 1);
  std::mt19937_64 rng = scenario_rng(e.seed, 0);
  const Scene s = sample_scene(e.base, 1, 1, rng);
  TrainConfig t = e.train;
  t.seed = rng();
  const TrainResult r = train_scenario(s, t);
  CHECK(pts[0].sr.mean == r.sr);
  CHECK(pts[0].scenarios[0].sr == r.sr);
}

TEST_CASE("sweeps are independent of the thread count") {
  ExperimentConfig e = quick_config(20);
  e.mc = 3;
  e.values = {0.0, 10.0};
  const std::vector<SweepPoint> a = run_sweep(e);
  e.threads = 3;
  const std::vector<SweepPoint> b = run_sweep(e);
  for (std::size_t p = 0; p < a.size(); ++p)
    for (std::size_t j = 0; j < a[p].scenarios.size(); ++j)
      CHECK(a[p].scenarios[j].sr == b[p].scenarios[j].sr);
}

TEST_CASE("paired sweep emits both arms on the same scenes") {
  ExperimentConfig e = quick_config(30);
  e.paired_no_an = true;
  e.values = {10.0};
  const std::vector<SweepPoint> pts = run_sweep(e);
  REQUIRE(pts[0].sr_no_an.values.size() == 2);
  const CsvTable t = sweep_table(pts, "power");
  CHECK(t.header[0] == "power");
  REQUIRE(t.rows.size() == 2);
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(
        std::find(t.header.begin(), t.header.end(), name) - t.header.begin());
  };
  for (std::size_t r = 0; r < 2; ++r) {
    const std::vector<double> row = t.numeric_row(r);
    CHECK(row[col("paired_diff")] ==
          doctest::Approx(row[col("sr")] - row[col("sr_no_an")]).scale(1e-9));
  }
}

TEST_CASE("closed-form scenarios match the single-waveguide solver") {
  ExperimentConfig e;
  e.base.num_waveguides = 1;
  e.base.pas_per_waveguide = 1;
  e.paired_no_an = true;
  const ScenarioResult r = run_scenario(e, 4);
  std::mt19937_64 rng = scenario_rng(e.seed, 4);
  const Scene s = sample_scene(e.base, 1, 1, rng);
  CHECK(r.sr == doctest::Approx(alternate_optimize(s).state.sr).epsilon(1e-12));
  CHECK(r.sr_no_an <= r.sr + 1e-12);
}

TEST_CASE("robust sweeps report the clamped worst-case rate") {
  ExperimentConfig e = quick_config(20);
  e.train.mode = TrainMode::Robust;
  e.mc = 4;
  e.values = {0.0};
  const std::vector<SweepPoint> pts = run_sweep(e);
  for (const ScenarioResult& r : pts.front().scenarios) {
    CHECK(r.sr >= 0.0);
    CHECK(r.sr_true >= 0.0);
  }
}

TEST_CASE("mean secrecy rate grows with the power budget") {
  ExperimentConfig e;
  e.train.epochs = 300;
  e.mc = 10;
  e.values = {-10.0, 0.0, 10.0};
  const std::vector<SweepPoint> pts = run_sweep(e);
  MESSAGE("means " << pts[0].sr.mean << " " << pts[1].sr.mean << " " << pts[2].sr.mean);
  CHECK(pts[0].sr.mean < pts[1].sr.mean);
  CHECK(pts[1].sr.mean < pts[2].sr.mean);
}

TEST_CASE("heatmap grid and co-located Bob") {
  ExperimentConfig e = quick_config(30);
  const std::vector<HeatmapCell> cells = run_heatmap(e, 3, {Vec3(2.5, 2.5, 0.0)});
  REQUIRE(cells.size() == 9);
  CHECK(cells[0].x == 0.0);
  CHECK(cells[0].y == 0.0);
  CHECK(cells[1].x == 2.5);
  CHECK(cells[3].y == 2.5);
  CHECK(cells[4].x == 2.5);
  CHECK(cells[4].y == 2.5);
  CHECK(cells[4].sr == 0.0);
  for (const HeatmapCell& c : cells) CHECK(c.sr >= 0.0);
  const CsvTable t = heatmap_table(cells);
  CHECK(t.header == std::vector<std::string>{"x", "y", "sr"});
  e.train.mode = TrainMode::Robust;
  CHECK_THROWS_AS(run_heatmap(e, 3, {Vec3(1.0, 1.0, 0.0)}), std::invalid_argument);
}

TEST_CASE("csv round trip") {
  CsvTable t;
  t.header = {"a", "b"};
  t.add_row({1.0, -2.5e-13});
  t.add_row({0.1, 123456789.0});
  const std::string path = temp_path("roundtrip.csv");
  emit_csv(t, path);
  const CsvTable back = parse_csv(path);
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.numeric_row(0) == std::vector<double>{1.0, -2.5e-13});
  CHECK(back.numeric_row(1) == std::vector<double>{0.1, 123456789.0});
  CHECK_THROWS(parse_csv(temp_path("missing_file.csv")));
}

TEST_CASE("empty aggregate writes a header-only file") {
  const std::string path = temp_path("empty.csv");
  emit_csv(cdf_table(McAggregate::from({})), path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  std::string first;
  while (std::getline(in, line))
    if (lines++ == 0) first = line;
  CHECK(lines == 1);
  CHECK(first == "sr,quantile");
}

TEST_CASE("trace table has one row per epoch") {
  std::vector<EpochRecord> trace(5);
  for (int e = 0; e < 5; ++e) {
    trace[e].epoch = e;
    trace[e].sr = 0.5 * e;
    trace[e].lr = 1e-4;
  }
  const CsvTable t = trace_table(trace);
  CHECK(t.header ==
        std::vector<std::string>{"epoch", "sr", "loss", "pen1", "pen2", "pen3", "lr"});
  REQUIRE(t.rows.size() == 5);
  CHECK(t.numeric_row(4)[1] == 2.0);
}

TEST_CASE("config text parsing") {
  const auto cfg = parse_config_text(
      "# comment line\n"
      "waveguides = 4\n"
      "  power-dbm=10   # trailing comment\n"
      "\n"
      "numerator-mode = nominal\n");
  CHECK(cfg.size() == 3);
  CHECK(cfg.at("waveguides") == "4");
  CHECK(cfg.at("power-dbm") == "10");
  CHECK(cfg.at("numerator-mode") == "nominal");
  CHECK_THROWS_AS(parse_config_text("no equals sign here\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text(" = 3\n"), std::invalid_argument);
}
