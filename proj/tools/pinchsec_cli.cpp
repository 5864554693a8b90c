// Command-line front end: closed-form solver, training, sweeps, heatmap, CDF
// and the gradient check. Every subcommand writes CSV into --out.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pinchsec/harness.hpp"

namespace fs = std::filesystem;
using namespace pinchsec;

namespace {

struct Globals {
  int waveguides = 2;
  int pas = 4;
  int bobs = 1;
  int eves = 1;
  double fc = 28e9;
  double neff = 1.4;
  double noise_dbm = -90.0;
  double spacing = -1.0;  // negative: lambda / 2
  double power_dbm = 0.0;
  double side = 5.0;
  std::string numerator = "conservative";
  std::string out = ".";
  std::string config;
  int threads = 1;
};

struct TrainFlags {
  std::string mode = "perfect";
  double sigma2 = 0.05;
  int epochs = 1500;
  std::uint64_t seed = 0;
  bool no_an = false;
};

Vec3 parse_point(const std::string& s) {
  double x = 0.0, y = 0.0;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> x >> comma >> y) || comma != ',')
    throw std::invalid_argument("expected x,y but got '" + s + "'");
  return {x, y, 0.0};
}

std::vector<Vec3> parse_points(const std::string& s) {
  std::vector<Vec3> pts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';'))
    if (!item.empty()) pts.push_back(parse_point(item));
  return pts;
}

Scene build_scene(const Globals& g) {
  Scene s = default_scene();
  s.num_waveguides = g.waveguides;
  s.pas_per_waveguide = g.pas;
  s.carrier = g.fc;
  s.neff = g.neff;
  s.noise_bob = dbm_to_watt(g.noise_dbm);
  s.noise_eve = s.noise_bob;
  s.power = dbm_to_watt(g.power_dbm);
  s.side = g.side;
  s.min_spacing = g.spacing >= 0.0 ? g.spacing : free_space_wavelength(g.fc) / 2.0;
  return s;
}

TrainConfig build_train(const Globals& g, const TrainFlags& t) {
  TrainConfig c;
  if (t.mode == "perfect") c.mode = TrainMode::Perfect;
  else if (t.mode == "robust") c.mode = TrainMode::Robust;
  else throw std::invalid_argument("--mode must be perfect or robust");
  if (g.numerator == "conservative") c.numerator = NumeratorMode::Conservative;
  else if (g.numerator == "nominal") c.numerator = NumeratorMode::Nominal;
  else throw std::invalid_argument("--numerator-mode must be conservative or nominal");
  c.sigma_xyz = Vec3(t.sigma2, t.sigma2, 0.0);
  c.epochs = t.epochs;
  c.seed = t.seed;
  c.an_enabled = !t.no_an;
  return c;
}

ExperimentConfig build_experiment(const Globals& g, const TrainFlags& t) {
  ExperimentConfig e;
  e.base = build_scene(g);
  e.num_bobs = g.bobs;
  e.num_eves = g.eves;
  e.train = build_train(g, t);
  e.seed = t.seed;
  e.threads = g.threads;
  return e;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

void add_train_flags(CLI::App* app, TrainFlags& t, bool with_no_an) {
  app->add_option("--mode", t.mode, "perfect | robust")->check(CLI::IsMember({"perfect", "robust"}));
  app->add_option("--sigma2", t.sigma2, "position error variance (m^2) on x and y");
  app->add_option("--epochs", t.epochs);
  app->add_option("--seed", t.seed);
  if (with_no_an) app->add_flag("--no-an", t.no_an, "disable artificial noise");
}

// Config values fill every option the command line left unset.
void apply_config(CLI::App& app, CLI::App* sub, const std::map<std::string, std::string>& cfg) {
  for (const auto& [key, value] : cfg) {
    const std::string name = "--" + key;
    CLI::Option* opt = nullptr;
    if (sub) {
      try {
        opt = sub->get_option(name);
      } catch (const CLI::OptionNotFound&) {
      }
    }
    if (!opt) {
      try {
        opt = app.get_option(name);
      } catch (const CLI::OptionNotFound&) {
        throw std::invalid_argument("unknown config key: " + key);
      }
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Secure beamforming and pinching-antenna placement"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  TrainFlags t;

  app.add_option("--waveguides", g.waveguides, "N");
  app.add_option("--pas", g.pas, "M, PAs per waveguide");
  app.add_option("--bobs", g.bobs, "I");
  app.add_option("--eves", g.eves, "K");
  app.add_option("--fc", g.fc, "carrier frequency (Hz)");
  app.add_option("--neff", g.neff);
  app.add_option("--noise-dbm", g.noise_dbm);
  app.add_option("--spacing", g.spacing, "minimum PA spacing (m); default lambda/2");
  app.add_option("--power-dbm", g.power_dbm);
  app.add_option("--side", g.side, "D (m)");
  app.add_option("--numerator-mode", g.numerator)
      ->check(CLI::IsMember({"conservative", "nominal"}));
  app.add_option("--out", g.out, "output directory");
  app.add_option("--config", g.config, "key = value file; flags override it");
  app.add_option("--threads", g.threads);

  auto* single = app.add_subcommand("single", "closed-form single-waveguide solver");
  std::string bob = "2.5,2.5", eve = "1,1";
  single->add_option("--bob", bob, "x,y");
  single->add_option("--eve", eve, "x,y");

  auto* train = app.add_subcommand("train", "train one scenario");
  add_train_flags(train, t, true);

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep of one parameter");
  add_train_flags(sweep, t, true);
  std::string axis = "power";
  std::vector<double> values = {0.0};
  int mc = 20;
  bool paired = false;
  sweep->add_option("--axis", axis)
      ->check(CLI::IsMember({"power", "side", "bobs", "eves", "sigma2", "waveguides", "pas"}));
  sweep->add_option("--values", values)->delimiter(',');
  sweep->add_option("--mc", mc);
  sweep->add_flag("--paired", paired, "also train every scenario without AN");

  auto* heatmap = app.add_subcommand("heatmap", "SR over a grid of Bob positions");
  add_train_flags(heatmap, t, true);
  int grid = 11;
  std::string heat_eves = "2.5,1.25;2.5,3.75";
  heatmap->add_option("--grid", grid, "R, cells per side");
  heatmap->add_option("--eves", heat_eves, "fixed Eve positions \"x,y;x,y\"");

  auto* cdf = app.add_subcommand("cdf", "empirical CDF of SR over scenarios");
  add_train_flags(cdf, t, true);
  cdf->add_option("--mc", mc);

  auto* gradcheck = app.add_subcommand("gradcheck", "autodiff finite-difference suite");
  std::uint64_t gc_seed = 0;
  gradcheck->add_option("--seed", gc_seed);

  // The config path and the chosen subcommand are needed before parsing.
  CLI::App* chosen = nullptr;
  std::string config_path;
  for (int j = 1; j < argc; ++j) {
    const std::string a = argv[j];
    if (a == "--config" && j + 1 < argc) config_path = argv[j + 1];
    else if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    for (CLI::App* s : app.get_subcommands([](CLI::App*) { return true; }))
      if (!chosen && a == s->get_name()) chosen = s;
  }

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) apply_config(app, chosen, parse_config_file(config_path));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (single->parsed()) {
    Scene s = build_scene(g);
    s.num_waveguides = 1;
    s.pas_per_waveguide = 1;
    s.bobs = {parse_point(bob)};
    s.eves = {parse_point(eve)};
    s.validate();
    const AlternateResult r = alternate_optimize(s);
    CsvTable table;
    table.header = {"x_p", "w_power", "an_power", "sr", "iterations"};
    table.add_row({r.state.x_p, r.state.w_power, r.state.an_power, r.state.sr,
                   static_cast<double>(r.iterations)});
    emit_csv(table, out_path(g, "single_position.csv"));
    std::printf("x_p = %.9g m  |w|^2 = %.9g W  R_m = %.9g W  SR = %.9g bps/Hz\n", r.state.x_p,
                r.state.w_power, r.state.an_power, r.state.sr);
  } else if (train->parsed()) {
    ExperimentConfig e = build_experiment(g, t);
    std::mt19937_64 rng = scenario_rng(e.seed, 0);
    const Scene s = sample_scene(e.base, e.num_bobs, e.num_eves, rng);
    const TrainResult r = train_scenario(s, e.train);
    emit_csv(trace_table(r.trace), out_path(g, "train_epoch.csv"));
    std::printf("SR = %.9g bps/Hz  best epoch %d  feasible %d\n", r.sr, r.best_epoch,
                r.feasible ? 1 : 0);
  } else if (sweep->parsed()) {
    ExperimentConfig e = build_experiment(g, t);
    e.axis = axis;
    e.values = values;
    e.mc = mc;
    e.paired_no_an = paired;
    const std::vector<SweepPoint> pts = run_sweep(e);
    emit_csv(sweep_table(pts, axis), out_path(g, "sweep_" + axis + ".csv"));
    for (const SweepPoint& p : pts)
      std::printf("%s = %g  mean SR = %.6g%s\n", axis.c_str(), p.value, p.sr.mean,
                  paired ? ("  without AN = " + format_number(p.sr_no_an.mean)).c_str() : "");
  } else if (heatmap->parsed()) {
    ExperimentConfig e = build_experiment(g, t);
    const std::vector<HeatmapCell> cells = run_heatmap(e, grid, parse_points(heat_eves));
    emit_csv(heatmap_table(cells), out_path(g, "heatmap_grid.csv"));
    std::printf("%zu cells written\n", cells.size());
  } else if (cdf->parsed()) {
    ExperimentConfig e = build_experiment(g, t);
    e.mc = mc;
    e.axis = "power";
    e.values = {g.power_dbm};
    const std::vector<SweepPoint> pts = run_sweep(e);
    emit_csv(cdf_table(pts.front().sr), out_path(g, "cdf_sr.csv"));
    std::printf("mean SR = %.6g  median = %.6g\n", pts.front().sr.mean,
                pts.front().sr.quantile(0.5));
  } else if (gradcheck->parsed()) {
    GradcheckOptions opt;
    opt.seed = gc_seed;
    const std::vector<GradcheckEntry> entries = run_gradcheck(opt);
    emit_csv(gradcheck_table(entries), out_path(g, "gradcheck_ops.csv"));
    bool ok = true;
    for (const GradcheckEntry& en : entries) {
      std::printf("%s %-20s checked %5d  max rel err %.3e\n", en.pass ? "PASS" : "FAIL",
                  en.name.c_str(), en.checked, en.max_rel_error);
      ok = ok && en.pass;
    }
    return ok ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
