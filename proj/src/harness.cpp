#include "pinchsec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "pinchsec/units.hpp"

namespace pinchsec {

Scene default_scene() {
  Scene s;
  s.side = 5.0;
  s.height = 2.0;
  s.num_waveguides = 2;
  s.pas_per_waveguide = 4;
  s.noise_bob = dbm_to_watt(-90.0);
  s.noise_eve = dbm_to_watt(-90.0);
  s.carrier = 28e9;
  s.neff = 1.4;
  s.power = dbm_to_watt(0.0);
  s.min_spacing = free_space_wavelength(s.carrier) / 2.0;
  return s;
}

std::mt19937_64 scenario_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Scene sample_scene(const Scene& base, int num_bobs, int num_eves, std::mt19937_64& rng) {
  if (!(base.side > 0.0)) throw std::invalid_argument("side length must be positive");
  if (num_bobs < 1 || num_eves < 1) throw std::invalid_argument("need at least one Bob and one Eve");
  std::uniform_real_distribution<double> coord(0.0, base.side);
  Scene s = base;
  std::vector<Vec3> users;
  const int total = num_bobs + num_eves;
  while (static_cast<int>(users.size()) < total) {
    const Vec3 p(coord(rng), coord(rng), 0.0);
    bool clash = false;
    for (const Vec3& q : users) clash = clash || (p - q).norm() < 1e-6;
    if (!clash) users.push_back(p);
  }
  s.bobs.assign(users.begin(), users.begin() + num_bobs);
  s.eves.assign(users.begin() + num_bobs, users.end());
  s.validate();
  return s;
}

McAggregate McAggregate::from(const std::vector<double>& values,
                              const std::vector<std::vector<double>>& traces) {
  McAggregate a;
  a.values = values;
  if (!values.empty())
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < sorted.size(); ++j)
    a.cdf.push_back({sorted[j], static_cast<double>(j + 1) / static_cast<double>(sorted.size())});
  if (!traces.empty() && !traces[0].empty()) {
    a.mean_trace.assign(traces[0].size(), 0.0);
    for (const auto& t : traces)
      for (std::size_t e = 0; e < a.mean_trace.size() && e < t.size(); ++e)
        a.mean_trace[e] += t[e] / static_cast<double>(traces.size());
  }
  return a;
}

double McAggregate::quantile(double q) const {
  if (cdf.empty()) throw std::logic_error("quantile of an empty aggregate");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(cdf.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, cdf.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return cdf[lo].value + t * (cdf[hi].value - cdf[lo].value);
}

ExperimentConfig apply_axis(const ExperimentConfig& config, const std::string& axis, double value) {
  ExperimentConfig c = config;
  if (axis == "power") {
    c.base.power = dbm_to_watt(value);
  } else if (axis == "side") {
    c.base.side = value;
  } else if (axis == "bobs") {
    c.num_bobs = static_cast<int>(std::lround(value));
  } else if (axis == "eves") {
    c.num_eves = static_cast<int>(std::lround(value));
  } else if (axis == "sigma2") {
    c.train.sigma_xyz = Vec3(value, value, 0.0);
  } else if (axis == "waveguides") {
    c.base.num_waveguides = static_cast<int>(std::lround(value));
  } else if (axis == "pas") {
    c.base.pas_per_waveguide = static_cast<int>(std::lround(value));
  } else {
    throw std::invalid_argument("unknown sweep axis: " + axis);
  }
  return c;
}

namespace {

bool closed_form_case(const ExperimentConfig& c) {
  return c.train.mode == TrainMode::Perfect && c.base.num_waveguides == 1 &&
         c.base.pas_per_waveguide == 1 && c.num_bobs == 1 && c.num_eves == 1;
}

// SR of a fixed solution against Eves at other positions.
double sr_at_eves(const Scene& scene, const Solution& sol, const std::vector<Vec3>& eves) {
  ChannelSet ch;
  ch.bob = CMatrix(scene.num_bobs(), scene.num_waveguides);
  ch.eve = CMatrix(static_cast<int>(eves.size()), scene.num_waveguides);
  for (int i = 0; i < scene.num_bobs(); ++i)
    ch.bob.row(i) = channel_vector(scene, sol.layout, scene.bobs[i]).transpose();
  for (std::size_t k = 0; k < eves.size(); ++k)
    ch.eve.row(static_cast<int>(k)) = channel_vector(scene, sol.layout, eves[k]).transpose();
  return secrecy_rate(ch, sol, scene);
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int j = 0; j < count; ++j) body(j);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int j = next++; j < count; j = next++) {
        try {
          body(j);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ScenarioResult run_scenario(const ExperimentConfig& config, int index) {
  std::mt19937_64 rng = scenario_rng(config.seed, static_cast<std::uint64_t>(index));
  const Scene scene = sample_scene(config.base, config.num_bobs, config.num_eves, rng);
  ScenarioResult out;
  out.index = index;
  if (closed_form_case(config)) {
    const AlternateResult alt = alternate_optimize(scene);
    out.sr = alt.state.sr;
    out.sr_true = out.sr;
    out.sr_no_an = optimal_pa_position(scene, scene.power, 0.0).sr;
    out.feasible = true;
    out.trace = alt.sr_trace;
    return out;
  }
  TrainConfig train = config.train;
  train.seed = rng();
  const TrainResult r = train_scenario(scene, train);
  out.sr = std::max(r.sr, 0.0);
  out.pen3 = r.pen3;
  out.feasible = r.feasible;
  out.trace.reserve(r.trace.size());
  for (const EpochRecord& e : r.trace) out.trace.push_back(e.sr);
  out.sr_true = out.sr;
  if (train.mode == TrainMode::Robust && config.evaluate_true_eves) {
    std::vector<Vec3> truth;
    for (const Vec3& e : scene.eves) truth.push_back(e + sample_position_offset(train.sigma_xyz, rng));
    out.sr_true = sr_at_eves(scene, r.solution, truth);
  }
  if (config.paired_no_an) {
    TrainConfig plain = train;
    plain.an_enabled = false;
    out.sr_no_an = std::max(train_scenario(scene, plain).sr, 0.0);
  }
  return out;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config) {
  if (config.values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (config.mc < 1) throw std::invalid_argument("mc count must be at least 1");
  std::vector<SweepPoint> points;
  for (double v : config.values) {
    const ExperimentConfig c = apply_axis(config, config.axis, v);
    SweepPoint p;
    p.value = v;
    p.scenarios.resize(static_cast<std::size_t>(c.mc));
    parallel_for(c.mc, c.threads, [&](int j) { p.scenarios[j] = run_scenario(c, j); });
    std::vector<double> sr, sr_true, sr_no_an;
    std::vector<std::vector<double>> traces;
    for (const ScenarioResult& s : p.scenarios) {
      sr.push_back(s.sr);
      sr_true.push_back(s.sr_true);
      sr_no_an.push_back(s.sr_no_an);
      traces.push_back(s.trace);
    }
    p.sr = McAggregate::from(sr, traces);
    p.sr_true = McAggregate::from(sr_true);
    p.sr_no_an = McAggregate::from(sr_no_an);
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<HeatmapCell> run_heatmap(const ExperimentConfig& config, int resolution,
                                     const std::vector<Vec3>& eves) {
  if (resolution < 2) throw std::invalid_argument("heatmap resolution must be at least 2");
  if (eves.empty()) throw std::invalid_argument("heatmap needs at least one Eve");
  if (config.train.mode != TrainMode::Perfect)
    throw std::invalid_argument("heatmap runs with perfect CSI only");
  const double side = config.base.side;
  std::vector<HeatmapCell> cells(static_cast<std::size_t>(resolution * resolution));
  parallel_for(resolution * resolution, config.threads, [&](int j) {
    const int r = j / resolution;
    const int c = j % resolution;
    HeatmapCell cell;
    cell.x = side * c / (resolution - 1);
    cell.y = side * r / (resolution - 1);
    Scene scene = config.base;
    scene.bobs = {Vec3(cell.x, cell.y, 0.0)};
    scene.eves = eves;
    std::mt19937_64 rng = scenario_rng(config.seed, static_cast<std::uint64_t>(j));
    TrainConfig train = config.train;
    train.seed = rng();
    if (scene.num_waveguides == 1 && scene.pas_per_waveguide == 1 && eves.size() == 1) {
      cell.sr = alternate_optimize(scene).state.sr;
    } else {
      cell.sr = train_scenario(scene, train).sr;
    }
    cells[static_cast<std::size_t>(j)] = cell;
  });
  return cells;
}

// --------------------------------------------------------------------- csv

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(format_number(v));
  rows.push_back(std::move(row));
}

std::vector<double> CsvTable::numeric_row(std::size_t r) const {
  std::vector<double> out;
  for (const std::string& cell : rows.at(r)) out.push_back(std::stod(cell));
  return out;
}

void emit_csv(const CsvTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) f << ',';
      f << row[j];
    }
    f << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  f.flush();
  if (!f) throw std::runtime_error("write failed for " + path);
}

CsvTable parse_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for reading");
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else if (!line.empty()) {
      if (cells.size() != t.header.size())
        throw std::runtime_error(path + ": row width differs from header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw std::runtime_error(path + ": missing header row");
  return t;
}

CsvTable trace_table(const std::vector<EpochRecord>& trace) {
  CsvTable t;
  t.header = {"epoch", "sr", "loss", "pen1", "pen2", "pen3", "lr"};
  for (const EpochRecord& e : trace)
    t.add_row({static_cast<double>(e.epoch), e.sr, e.loss, e.pen1, e.pen2, e.pen3, e.lr});
  return t;
}

CsvTable sweep_table(const std::vector<SweepPoint>& points, const std::string& axis) {
  CsvTable t;
  t.header = {axis, "scenario", "sr", "sr_true", "sr_no_an", "paired_diff", "pen3", "feasible"};
  for (const SweepPoint& p : points)
    for (const ScenarioResult& s : p.scenarios)
      t.add_row({p.value, static_cast<double>(s.index), s.sr, s.sr_true, s.sr_no_an,
                 s.sr - s.sr_no_an, s.pen3, s.feasible ? 1.0 : 0.0});
  return t;
}

CsvTable heatmap_table(const std::vector<HeatmapCell>& cells) {
  CsvTable t;
  t.header = {"x", "y", "sr"};
  for (const HeatmapCell& c : cells) t.add_row({c.x, c.y, c.sr});
  return t;
}

CsvTable cdf_table(const McAggregate& agg) {
  CsvTable t;
  t.header = {"sr", "quantile"};
  for (const CdfPoint& p : agg.cdf) t.add_row({p.value, p.quantile});
  return t;
}

// ------------------------------------------------------------------ config

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

// --------------------------------------------------------------- gradcheck

namespace {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

Tensor random_tensor(int r, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (double& v : t.data) v = u(rng);
  return t;
}

// Entries bounded away from zero, for ops with a kink there.
Tensor signed_tensor(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::bernoulli_distribution coin(0.5);
  Tensor t(r, c);
  for (double& v : t.data) v = coin(rng) ? u(rng) : -u(rng);
  return t;
}

// Reduces any output to a scalar with fixed pseudo-random weights.
Var contract(Tape& tape, Var out) {
  if (out.value().is_scalar()) return out;
  std::mt19937_64 rng(out.rows() * 131 + out.cols());
  return ad::sum(ad::mul(out, tape.constant(random_tensor(out.rows(), out.cols(), rng))));
}

Var contract(Tape& tape, const ad::CVar& out) {
  Var s = contract(tape, out.re);
  if (out.im) s = ad::add(s, ad::scale(contract(tape, ad::transpose(*out.im)), 0.7));
  return s;
}

double evaluate_graph(const GraphFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).scalar();
}

GradcheckEntry check_graph(const std::string& name, std::vector<Tensor> inputs, const GraphFn& f,
                           const GradcheckOptions& opt, bool extrapolate = false) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
    const Var loss = f(tape, vars);
    tape.backward(loss);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }
  GradcheckEntry e;
  e.name = name;
  // Relative error with the denominator floored at abs_floor / rel_tol, so
  // an entry passes when it is within rel_tol relatively or abs_floor absolutely.
  const double denom_floor = opt.abs_floor / opt.rel_tol;
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    for (std::size_t q = 0; q < inputs[j].size(); ++q) {
      const double x0 = inputs[j].data[q];
      auto central = [&](double h) {
        inputs[j].data[q] = x0 + h;
        const double fp = evaluate_graph(f, inputs);
        inputs[j].data[q] = x0 - h;
        const double fm = evaluate_graph(f, inputs);
        inputs[j].data[q] = x0;
        return (fp - fm) / (2.0 * h);
      };
      double fd;
      if (extrapolate) {
        const double h = opt.loss_step;
        const double d1 = central(h), d2 = central(h / 2), d4 = central(h / 4);
        fd = (16.0 * (4.0 * d4 - d2) / 3.0 - (4.0 * d2 - d1) / 3.0) / 15.0;
      } else {
        fd = central(opt.step);
      }
      const double a = analytic[j].data[q];
      const double err =
          std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), denom_floor});
      e.max_rel_error = std::max(e.max_rel_error, err);
      ++e.checked;
    }
  }
  e.pass = e.checked > 0 && e.max_rel_error < opt.rel_tol;
  return e;
}

GraphFn unary(Var (*op)(Var)) {
  return [op](Tape& t, const std::vector<Var>& v) { return contract(t, op(v[0])); };
}

GraphFn binary(Var (*op)(Var, Var)) {
  return [op](Tape& t, const std::vector<Var>& v) { return contract(t, op(v[0], v[1])); };
}

double min_preactivation(const Mlp& net, const Tensor& input) {
  double margin = std::numeric_limits<double>::infinity();
  Tensor h = input;
  for (int l = 0; l + 1 < net.num_layers(); ++l) {
    Mlp one;
    one.params = {net.params[2 * l], net.params[2 * l + 1]};
    h = one.forward(h);
    for (double& v : h.data) {
      margin = std::min(margin, std::abs(v));
      v = std::max(v, 0.0);
    }
  }
  return margin;
}

ad::CVar complex_of(const std::vector<Var>& v, std::size_t j) { return ad::CVar{v[j], v[j + 1]}; }

GradcheckEntry check_loss(TrainMode mode, const GradcheckOptions& opt) {
  Scene base = default_scene();
  base.num_waveguides = 2;
  base.pas_per_waveguide = 2;
  base.min_spacing = 0.5;  // keeps the spacing penalty active
  std::mt19937_64 rng = scenario_rng(opt.seed, mode == TrainMode::Robust ? 2 : 1);
  const Scene scene = sample_scene(base, 1, 1, rng);
  TrainConfig config;
  config.mode = mode;
  config.hidden = opt.loss_hidden;
  config.init_beam_fraction = 1.3;  // keeps the power penalty active
  config.init_an_fraction = 0.05;
  const Tensor features = scene_features(scene);
  Mlp net;
  do {
    config.seed = rng();
    net = Mlp::init(NetworkConfig::for_scene(scene, mode, config.hidden, config.seed));
  } while (min_preactivation(net, features) < opt.kink_margin);
  calibrate_gains(net.forward(features), scene, config);
  const PenaltyWeights u{1.0, 1.0, 1.0};
  const GraphFn f = [&](Tape& tape, const std::vector<Var>& params) {
    const Var raw = mlp_forward(tape, params, tape.constant(features));
    const DecodedVars dec = decode_outputs(tape, raw, scene, config);
    return mode == TrainMode::Robust ? loss_robust(tape, dec, scene, u, config).loss
                                     : loss_perfect(tape, dec, scene, u, config.spacing).loss;
  };
  return check_graph(mode == TrainMode::Robust ? "loss_robust" : "loss_perfect", net.params, f,
                     opt, true);
}

}  // namespace

std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  auto rnd = [&](int r, int c) { return random_tensor(r, c, rng); };
  auto pos = [&](int r, int c) { return random_tensor(r, c, rng, 0.5, 1.5); };
  std::vector<GradcheckEntry> out;
  auto run = [&](const std::string& name, std::vector<Tensor> in, const GraphFn& f) {
    out.push_back(check_graph(name, std::move(in), f, opt));
  };

  run("add", {rnd(3, 2), rnd(3, 2)}, binary(ad::add));
  run("add_broadcast", {rnd(1, 1), rnd(3, 2)}, binary(ad::add));
  run("sub", {rnd(3, 2), rnd(1, 1)}, binary(ad::sub));
  run("mul", {rnd(3, 2), rnd(3, 2)}, binary(ad::mul));
  run("div", {rnd(3, 2), pos(3, 2)}, binary(ad::div));
  run("neg", {rnd(3, 2)}, unary(ad::neg));
  run("scale", {rnd(3, 2)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::scale(v[0], -2.5));
  });
  run("add_scalar", {rnd(3, 2)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::square(ad::add_scalar(v[0], 0.3)));
  });
  run("exp", {rnd(3, 2)}, unary(ad::exp));
  run("log2", {pos(3, 2)}, unary(ad::log2));
  run("sqrt", {pos(3, 2)}, unary(ad::sqrt));
  run("relu", {signed_tensor(3, 2, rng)}, unary(ad::relu));
  run("sigmoid", {rnd(3, 2)}, unary(ad::sigmoid));
  run("softplus", {random_tensor(3, 2, rng, -40.0, 40.0)}, unary(ad::softplus));
  run("square", {rnd(3, 2)}, unary(ad::square));
  run("abs", {signed_tensor(3, 2, rng)}, unary(ad::abs));
  run("cos", {rnd(3, 2)}, unary(ad::cos));
  run("sin", {rnd(3, 2)}, unary(ad::sin));
  run("matmul", {rnd(3, 4), rnd(4, 2)}, binary(ad::matmul));
  run("transpose", {rnd(3, 2)}, unary(ad::transpose));
  run("sum", {rnd(3, 2)}, [](Tape&, const std::vector<Var>& v) {
    return ad::square(ad::sum(v[0]));
  });
  run("mean", {rnd(3, 2)}, [](Tape&, const std::vector<Var>& v) {
    return ad::square(ad::mean(v[0]));
  });
  run("sum_rows", {rnd(3, 4)}, unary(ad::sum_rows));
  run("block", {rnd(4, 4)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::block(v[0], 1, 2, 3, 2));
  });
  run("embed", {rnd(2, 3)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::embed(v[0], 4, 5, 1, 2));
  });
  run("reshape", {rnd(3, 4)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::reshape(v[0], 2, 6));
  });
  run("min_all", {rnd(3, 3)}, [](Tape&, const std::vector<Var>& v) {
    return ad::scale(ad::min_all(v[0]), 1.7);
  });
  run("sort_rows", {rnd(3, 5)}, unary(ad::sort_rows));
  run("affine", {rnd(3, 4), rnd(4, 1), rnd(3, 1)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::affine(v[0], v[1], v[2]));
  });
  run("cmul", {rnd(3, 2), rnd(3, 2), rnd(3, 2), rnd(3, 2)},
      [](Tape& t, const std::vector<Var>& v) {
        return contract(t, ad::cmul(complex_of(v, 0), complex_of(v, 2)));
      });
  run("cmatmul", {rnd(3, 4), rnd(3, 4), rnd(4, 2), rnd(4, 2)},
      [](Tape& t, const std::vector<Var>& v) {
        return contract(t, ad::cmatmul(complex_of(v, 0), complex_of(v, 2)));
      });
  run("ctranspose", {rnd(3, 2), rnd(3, 2)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::ctranspose(complex_of(v, 0)));
  });
  run("abs2", {rnd(3, 2), rnd(3, 2)}, [](Tape& t, const std::vector<Var>& v) {
    return contract(t, ad::abs2(complex_of(v, 0)));
  });
  run("min_eig", {rnd(4, 4), rnd(4, 4)}, [](Tape&, const std::vector<Var>& v) {
    return ad::min_eig(v[0], v[1]);
  });
  run("regularized_inverse", {rnd(3, 3), rnd(3, 3)}, [](Tape& t, const std::vector<Var>& v) {
    const ad::CVar x = complex_of(v, 0);
    const ad::CVar phi = ad::cmatmul(x, ad::ctranspose(x));
    return contract(t, ad::regularized_inverse(phi, 1e-2));
  });
  out.push_back(check_loss(TrainMode::Perfect, opt));
  out.push_back(check_loss(TrainMode::Robust, opt));
  return out;
}

CsvTable gradcheck_table(const std::vector<GradcheckEntry>& entries) {
  CsvTable t;
  t.header = {"op", "checked", "max_rel_error", "pass"};
  for (const GradcheckEntry& e : entries)
    t.rows.push_back({e.name, std::to_string(e.checked), format_number(e.max_rel_error),
                      e.pass ? "1" : "0"});
  return t;
}

}  // namespace pinchsec
