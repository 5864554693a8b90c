#include "pinchsec/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "pinchsec/numerics.hpp"
#include "pinchsec/units.hpp"

namespace pinchsec {

using ad::CVar;
using ad::Tape;
using ad::Tensor;
using ad::Var;

int NetworkConfig::output_dim_for(const Scene& scene, TrainMode mode) {
  const int n = scene.num_waveguides;
  const int m = scene.pas_per_waveguide;
  const int i = scene.num_bobs();
  const int k = scene.num_eves();
  int dim = 2 * n * i + 2 * n * n + m * n;
  if (mode == TrainMode::Robust) dim += 2 * i * k;
  return dim;
}

NetworkConfig NetworkConfig::for_scene(const Scene& scene, TrainMode mode,
                                       std::vector<int> hidden, std::uint64_t seed) {
  NetworkConfig c;
  c.input_dim = 2 * (scene.num_bobs() + scene.num_eves());
  c.output_dim = output_dim_for(scene, mode);
  c.hidden = std::move(hidden);
  c.seed = seed;
  return c;
}

Mlp Mlp::init(const NetworkConfig& config) {
  if (config.input_dim <= 0 || config.output_dim <= 0)
    throw std::invalid_argument("network dimensions must be positive");
  std::mt19937_64 rng(config.seed);
  std::vector<int> widths;
  widths.push_back(config.input_dim);
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(config.output_dim);
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w(out, in);
    for (double& v : w.data) v = dist(rng);
    net.params.push_back(std::move(w));
    net.params.emplace_back(out, 1);
  }
  return net;
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const Tensor& t : params) n += t.size();
  return n;
}

Tensor Mlp::forward(const Tensor& input) const {
  Tensor h = input;
  for (int l = 0; l < num_layers(); ++l) {
    const Tensor& w = params[2 * l];
    const Tensor& b = params[2 * l + 1];
    if (h.rows != w.cols || h.cols != 1) throw std::invalid_argument("input dimension mismatch");
    Tensor out = b;
    for (int r = 0; r < w.rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < w.cols; ++c) s += w(r, c) * h.data[c];
      out.data[r] += s;
    }
    if (l + 1 < num_layers())
      for (double& v : out.data) v = std::max(v, 0.0);
    h = std::move(out);
  }
  return h;
}

Var mlp_forward(Tape& tape, const std::vector<Var>& params, Var input) {
  (void)tape;
  const int layers = static_cast<int>(params.size() / 2);
  if (input.rows() != params[0].cols() || input.cols() != 1)
    throw std::invalid_argument("input dimension mismatch");
  Var h = input;
  for (int l = 0; l < layers; ++l) {
    h = ad::affine(params[2 * l], h, params[2 * l + 1]);
    if (l + 1 < layers) h = ad::relu(h);
  }
  return h;
}

Tensor scene_features(const Scene& scene) {
  Tensor t(2 * (scene.num_bobs() + scene.num_eves()), 1);
  int r = 0;
  for (const Vec3& p : scene.bobs) {
    t.data[r++] = p.x() / scene.side;
    t.data[r++] = p.y() / scene.side;
  }
  for (const Vec3& p : scene.eves) {
    t.data[r++] = p.x() / scene.side;
    t.data[r++] = p.y() / scene.side;
  }
  return t;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr) {
  if (grads.size() != params.size()) throw std::invalid_argument("gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, state.t);
  const double c2 = 1.0 - std::pow(state.beta2, state.t);
  // lr (m / c1) / (sqrt(v / c2) + eps) rewritten with the corrections folded in
  const double step = lr * std::sqrt(c2) / c1;
  const double eps = state.eps * std::sqrt(c2);
  const double b1 = state.beta1, b2 = state.beta2;
  for (std::size_t p = 0; p < params.size(); ++p) {
    double* m = state.m[p].data();
    double* v = state.v[p].data();
    const double* g = grads[p].data.data();
    double* x = params[p].data.data();
    const std::size_t size = params[p].size();
    for (std::size_t j = 0; j < size; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      x[j] -= step * m[j] / (std::sqrt(v[j]) + eps);
    }
  }
}

double initial_power_penalty(double power_dbm) {
  static const double kDbm[] = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
  static const double kU1[] = {15000.0, 15000.0, 9000.0, 3000.0, 300.0, 30.0, 1.0};
  if (power_dbm <= kDbm[0]) return kU1[0];
  if (power_dbm >= kDbm[6]) return kU1[6];
  for (int j = 0; j < 6; ++j) {
    if (power_dbm <= kDbm[j + 1]) {
      const double t = (power_dbm - kDbm[j]) / (kDbm[j + 1] - kDbm[j]);
      return kU1[j] + t * (kU1[j + 1] - kU1[j]);
    }
  }
  return kU1[6];
}

double lmi_penalty_weight(double sigma2) {
  static const double kSigma[] = {0.05, 0.15, 0.3};
  static const double kU3[] = {2e5, 5e5, 1e6};
  int best = 0;
  for (int j = 1; j < 3; ++j)
    if (std::abs(sigma2 - kSigma[j]) < std::abs(sigma2 - kSigma[best])) best = j;
  return kU3[best];
}

PenaltyWeights penalty_schedule(int epoch, double power_dbm, double sigma2) {
  PenaltyWeights u;
  const double u0 = initial_power_penalty(power_dbm);
  u.u1 = std::min(u0 * std::pow(1.2, epoch / 10), 100.0 * u0);
  u.u2 = 100.0;
  u.u3 = lmi_penalty_weight(sigma2);
  return u;
}

double TrainConfig::learning_rate(int epoch) const {
  return lr0 * std::pow(lr_decay, epoch / lr_step);
}

namespace {

Var constant_matrix(Tape& tape, int rows, int cols, double fill = 0.0) {
  return tape.constant(Tensor(rows, cols, fill));
}

CMatrix complex_value(const CVar& v) {
  CMatrix m(v.rows(), v.cols());
  const Tensor& re = v.re.value();
  for (int r = 0; r < re.rows; ++r)
    for (int c = 0; c < re.cols; ++c)
      m(r, c) = Complex(re(r, c), v.im ? v.im->value()(r, c) : 0.0);
  return m;
}

// Rates of every stream at one receiver, 1 x I, with powers normalized by noise.
Var stream_rates(Tape& tape, const CVar& h, const DecodedVars& dec, double noise) {
  const CVar s = ad::cmatmul(ad::ctranspose(h), dec.beams);  // 1 x I, h^H w_i
  const Var a = ad::scale(ad::abs2(s), 1.0 / noise);
  Var total = ad::sum(a);
  if (dec.gram) {
    const CVar t = ad::cmatmul(ad::ctranspose(*dec.gram), h);  // G^H h
    total = ad::add(total, ad::scale(ad::sum(ad::abs2(t)), 1.0 / noise));
  }
  (void)tape;
  return ad::sub(ad::log2(ad::add_scalar(total, 1.0)),
                 ad::log2(ad::add_scalar(ad::sub(total, a), 1.0)));
}

Var power_penalty_var(const DecodedVars& dec, const Scene& scene) {
  Var tr = ad::sum(ad::abs2(dec.beams));
  if (dec.gram) tr = ad::add(tr, ad::sum(ad::abs2(*dec.gram)));
  return ad::square(ad::relu(ad::add_scalar(ad::scale(tr, 1.0 / scene.power), -1.0)));
}

Var spacing_penalty_var(Tape& tape, Var x, const Scene& scene, SpacingForm form) {
  const int n = x.rows();
  const int m = x.cols();
  const double delta = scene.min_spacing;
  if (!(delta > 0.0)) return tape.constant(0.0);
  Var gaps;
  if (form == SpacingForm::Within) {
    if (m < 2) return tape.constant(0.0);
    gaps = ad::sub(ad::block(x, 0, 1, n, m - 1), ad::block(x, 0, 0, n, m - 1));
  } else {
    if (n < 2) return tape.constant(0.0);
    gaps = ad::sub(ad::block(x, 1, 0, n - 1, m), ad::block(x, 0, 0, n - 1, m));
  }
  // relu(1 - gap / Delta)^2, averaged over pairs
  return ad::mean(ad::square(ad::relu(ad::add_scalar(ad::scale(gaps, -1.0 / delta), 1.0))));
}

// K x I tensor assembled from scalar entries.
Var stack_entries(Tape& tape, const std::vector<std::vector<Var>>& entries) {
  const int rows = static_cast<int>(entries.size());
  const int cols = static_cast<int>(entries[0].size());
  Var acc = constant_matrix(tape, rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) acc = ad::add(acc, ad::embed(entries[r][c], rows, cols, r, c));
  return acc;
}

struct TapeJacobian {
  std::vector<CVar> columns;  // N x 1 per position axis
};

// Columns of dh/dp at the receiver (x, y, z), only for the requested axes.
TapeJacobian tape_jacobian(Tape& tape, Var x, const Scene& scene, const Vec3& rx,
                           const Vec3& sigma) {
  const int n = x.rows();
  const int m = x.cols();
  const double lambda = free_space_wavelength(scene.carrier);
  const double k0 = 2.0 * kPi / lambda;
  const double kg = 2.0 * kPi / guided_wavelength(scene.carrier, scene.neff);
  const double amp0 = std::sqrt(path_gain(scene.carrier)) / std::sqrt(static_cast<double>(m));
  Tensor rest(n, m), dy(n, m);
  for (int r = 0; r < n; ++r) {
    const double y = r * scene.side / n;
    for (int c = 0; c < m; ++c) {
      dy(r, c) = rx.y() - y;
      rest(r, c) = dy(r, c) * dy(r, c) + (rx.z() - scene.height) * (rx.z() - scene.height);
    }
  }
  const Var dx = ad::neg(ad::add_scalar(x, -rx.x()));  // rx.x - x
  const Var dist = ad::sqrt(ad::add(ad::square(dx), tape.constant(rest)));
  const Var inv_r = ad::div(tape.constant(1.0), dist);
  const Var phase = ad::add(ad::scale(ad::abs(ad::add_scalar(x, -scene.feed_x)), kg),
                            ad::scale(dist, k0));
  const Var amp = ad::scale(inv_r, amp0);
  const Var cre = ad::mul(amp, ad::cos(phase));
  const Var cim = ad::neg(ad::mul(amp, ad::sin(phase)));
  // c (-1/r - j k0) / r
  const Var inv_r2 = ad::square(inv_r);
  const Var fre = ad::add(ad::neg(ad::mul(cre, inv_r2)), ad::scale(ad::mul(cim, inv_r), k0));
  const Var fim = ad::sub(ad::scale(ad::neg(ad::mul(cre, inv_r)), k0), ad::mul(cim, inv_r2));
  TapeJacobian jac;
  for (int a = 0; a < 3; ++a) {
    if (!(sigma(a) > 0.0)) {
      jac.columns.push_back({constant_matrix(tape, n, 1), std::nullopt});
      continue;
    }
    Var delta;
    if (a == 0) delta = dx;
    else if (a == 1) delta = tape.constant(dy);
    else delta = constant_matrix(tape, n, m, rx.z() - scene.height);
    jac.columns.push_back({ad::sum_rows(ad::mul(fre, delta)), ad::sum_rows(ad::mul(fim, delta))});
  }
  return jac;
}

}  // namespace

CVar tape_channel(Tape& tape, Var x, const Scene& scene, const Vec3& rx) {
  const int n = x.rows();
  const int m = x.cols();
  const double k0 = 2.0 * kPi / free_space_wavelength(scene.carrier);
  const double kg = 2.0 * kPi / guided_wavelength(scene.carrier, scene.neff);
  const double amp0 = std::sqrt(path_gain(scene.carrier)) / std::sqrt(static_cast<double>(m));
  Tensor rest(n, m);
  for (int r = 0; r < n; ++r) {
    const double y = r * scene.side / n;
    for (int c = 0; c < m; ++c)
      rest(r, c) = (rx.y() - y) * (rx.y() - y) + (rx.z() - scene.height) * (rx.z() - scene.height);
  }
  const Var dist = ad::sqrt(ad::add(ad::square(ad::add_scalar(x, -rx.x())), tape.constant(rest)));
  const Var phase = ad::add(ad::scale(ad::abs(ad::add_scalar(x, -scene.feed_x)), kg),
                            ad::scale(dist, k0));
  const Var amp = ad::div(tape.constant(amp0), dist);
  return {ad::sum_rows(ad::mul(amp, ad::cos(phase))),
          ad::neg(ad::sum_rows(ad::mul(amp, ad::sin(phase))))};
}

DecodedVars decode_outputs(Tape& tape, Var raw, const Scene& scene, const TrainConfig& config) {
  const int n = scene.num_waveguides;
  const int m = scene.pas_per_waveguide;
  const int ni = scene.num_bobs();
  const int nk = scene.num_eves();
  const bool robust = config.mode == TrainMode::Robust;
  const int expected = NetworkConfig::output_dim_for(scene, config.mode);
  if (raw.rows() != expected || raw.cols() != 1)
    throw std::invalid_argument("raw output length does not match the decode layout");
  const double root_p = config.scale_outputs ? std::sqrt(scene.power) : 1.0;
  const double gain = config.scale_outputs ? config.beam_gain * root_p : 1.0;
  const double gain_an = config.scale_outputs ? config.an_gain * root_p : 1.0;

  DecodedVars dec;
  int off = 0;
  // Bob i contributes [Re w_i (N), Im w_i (N)].
  Var wre = constant_matrix(tape, n, ni);
  Var wim = constant_matrix(tape, n, ni);
  for (int i = 0; i < ni; ++i) {
    wre = ad::add(wre, ad::embed(ad::block(raw, off, 0, n, 1), n, ni, 0, i));
    wim = ad::add(wim, ad::embed(ad::block(raw, off + n, 0, n, 1), n, ni, 0, i));
    off += 2 * n;
  }
  dec.beams = {ad::scale(wre, gain), ad::scale(wim, gain)};
  if (config.an_enabled) {
    const Var gre = ad::reshape(ad::block(raw, off, 0, n * n, 1), n, n);
    const Var gim = ad::reshape(ad::block(raw, off + n * n, 0, n * n, 1), n, n);
    dec.gram = CVar{ad::scale(gre, gain_an), ad::scale(gim, gain_an)};
  }
  off += 2 * n * n;
  const Var logits = ad::reshape(ad::block(raw, off, 0, n * m, 1), n, m);
  dec.positions = ad::sort_rows(
      ad::scale(ad::sigmoid(ad::scale(logits, config.position_gain)), scene.side));
  off += n * m;
  if (robust) {
    // Zero logits decode to tau = tau_init and lambda = lambda_init, in units of sigma_E^2.
    const double unit = scene.noise_eve / std::log(2.0);
    const Var traw = ad::reshape(ad::block(raw, off, 0, nk * ni, 1), nk, ni);
    const Var lraw = ad::reshape(ad::block(raw, off + nk * ni, 0, nk * ni, 1), nk, ni);
    dec.tau = ad::scale(ad::softplus(traw), unit * config.tau_init);
    dec.lam = ad::scale(ad::softplus(lraw), unit * config.lambda_init);
  }
  return dec;
}

Solution to_solution(const DecodedVars& dec, const Scene& scene) {
  Solution sol;
  sol.beams = complex_value(dec.beams);
  const int n = scene.num_waveguides;
  if (dec.gram) {
    const CMatrix g = complex_value(*dec.gram);
    sol.an_cov = g * g.adjoint();
    sol.an_cov = 0.5 * (sol.an_cov + sol.an_cov.adjoint());
  } else {
    sol.an_cov = CMatrix::Zero(n, n);
  }
  const Tensor& x = dec.positions.value();
  Eigen::MatrixXd xv(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r)
    for (int c = 0; c < x.cols; ++c) xv(r, c) = std::clamp(x(r, c), 0.0, scene.side);
  sol.layout = make_layout(scene, xv);
  if (dec.tau && dec.lam) {
    const Tensor& t = dec.tau->value();
    const Tensor& l = dec.lam->value();
    sol.aux_tau.resize(t.rows, t.cols);
    sol.aux_lambda.resize(l.rows, l.cols);
    for (int r = 0; r < t.rows; ++r)
      for (int c = 0; c < t.cols; ++c) {
        sol.aux_tau(r, c) = t(r, c);
        sol.aux_lambda(r, c) = l(r, c);
      }
  }
  return sol;
}

Solution decode_solution(const Tensor& raw, const Scene& scene, const TrainConfig& config) {
  Tape tape;
  const Var r = tape.constant(raw);
  return to_solution(decode_outputs(tape, r, scene, config), scene);
}

LossTerms loss_perfect(Tape& tape, const DecodedVars& dec, const Scene& scene,
                       const PenaltyWeights& u, SpacingForm spacing) {
  const int ni = scene.num_bobs();
  const int nk = scene.num_eves();
  std::vector<Var> bob_rates;
  for (int i = 0; i < ni; ++i)
    bob_rates.push_back(stream_rates(tape, tape_channel(tape, dec.positions, scene, scene.bobs[i]),
                                     dec, scene.noise_bob));
  std::vector<std::vector<Var>> gaps(nk, std::vector<Var>(ni));
  for (int k = 0; k < nk; ++k) {
    const Var eve = stream_rates(tape, tape_channel(tape, dec.positions, scene, scene.eves[k]),
                                 dec, scene.noise_eve);
    for (int i = 0; i < ni; ++i)
      gaps[k][i] = ad::sub(ad::block(bob_rates[i], 0, i, 1, 1), ad::block(eve, 0, i, 1, 1));
  }
  LossTerms t;
  t.sr = ad::min_all(stack_entries(tape, gaps));
  t.pen1 = power_penalty_var(dec, scene);
  t.pen2 = spacing_penalty_var(tape, dec.positions, scene, spacing);
  t.pen3 = tape.constant(0.0);
  t.loss = ad::add(ad::add(ad::neg(t.sr), ad::scale(t.pen1, u.u1)), ad::scale(t.pen2, u.u2));
  return t;
}

LossTerms loss_robust(Tape& tape, const DecodedVars& dec, const Scene& scene,
                      const PenaltyWeights& u, const TrainConfig& config) {
  if (!dec.tau || !dec.lam) throw std::invalid_argument("robust loss needs tau and lambda");
  const int n = scene.num_waveguides;
  const int ni = scene.num_bobs();
  const int nk = scene.num_eves();
  const double noise = scene.noise_eve;
  const double sign = config.lmi == LmiForm::Sound ? 1.0 : -1.0;

  std::vector<Var> bob_rates;
  for (int i = 0; i < ni; ++i)
    bob_rates.push_back(stream_rates(tape, tape_channel(tape, dec.positions, scene, scene.bobs[i]),
                                     dec, scene.noise_bob));

  // Q_i / sigma_E^2 = (R_m + sum_{m != i} w_m w_m^H) / sigma_E^2
  std::vector<CVar> q(ni);
  for (int i = 0; i < ni; ++i) {
    CVar acc{constant_matrix(tape, n, n), std::nullopt};
    if (dec.gram) acc = ad::cadd(acc, ad::cmatmul(*dec.gram, ad::ctranspose(*dec.gram)));
    for (int j = 0; j < ni; ++j) {
      if (j == i) continue;
      const CVar w = ad::cblock(dec.beams, 0, j, n, 1);
      acc = ad::cadd(acc, ad::cmatmul(w, ad::ctranspose(w)));
    }
    q[i] = {ad::scale(acc.re, 1.0 / noise), acc.im ? std::optional<Var>(ad::scale(*acc.im, 1.0 / noise))
                                                  : std::nullopt};
  }

  std::vector<std::vector<Var>> terms(nk, std::vector<Var>(ni));
  Var violation = tape.constant(0.0);
  for (int k = 0; k < nk; ++k) {
    const Vec3& eve = scene.eves[k];
    const CVar h = tape_channel(tape, dec.positions, scene, eve);
    const TapeJacobian jac = tape_jacobian(tape, dec.positions, scene, eve, config.sigma_xyz);
    CVar phi{constant_matrix(tape, n, n), std::nullopt};
    for (int a = 0; a < 3; ++a) {
      if (!(config.sigma_xyz(a) > 0.0)) continue;
      const CVar& c = jac.columns[a];
      phi = ad::cadd(phi, ad::cmatmul(ad::cscale(c, tape.constant(config.sigma_xyz(a))),
                                      ad::ctranspose(c)));
    }
    const CVar phi_inv = ad::regularized_inverse(phi, config.eps_rel);
    for (int i = 0; i < ni; ++i) {
      const CVar w = ad::cblock(dec.beams, 0, i, n, 1);
      const Var lam = ad::block(*dec.lam, k, i, 1, 1);
      const Var tau = ad::block(*dec.tau, k, i, 1, 1);
      const Var lam_n = ad::scale(lam, 1.0 / noise);
      const Var tau_n = ad::scale(tau, 1.0 / noise);

      const Var nominal = ad::scale(ad::abs2(ad::cmatmul(ad::ctranspose(h), w)), 1.0 / noise);
      Var num = nominal;
      if (config.numerator == NumeratorMode::Conservative) {
        const CVar pw = ad::cmatmul(phi, w);
        const Var quad = ad::relu(ad::cmatmul(ad::ctranspose(w), pw).re);  // w^H Phi w
        const Var root = ad::add(ad::sqrt(nominal), ad::sqrt(ad::scale(quad, 1.0 / noise)));
        num = ad::square(root);
      }
      const Var eve_rate = ad::log2(ad::add_scalar(ad::div(num, lam_n), 1.0));
      terms[k][i] = ad::sub(ad::block(bob_rates[i], 0, i, 1, 1), eve_rate);

      // [[Q + s tau Phi^-1, Q h], [h^H Q, h^H Q h + 1 - lam - s tau]] in noise units
      const CVar qh = ad::cmatmul(q[i], h);
      const Var hqh = ad::cmatmul(ad::ctranspose(h), qh).re;
      const CVar tl = ad::cadd(q[i], ad::cscale(phi_inv, ad::scale(tau_n, sign)));
      const Var br = ad::sub(ad::sub(ad::add_scalar(hqh, 1.0), lam_n), ad::scale(tau_n, sign));
      CVar lmi = ad::cembed(tl, n + 1, n + 1, 0, 0);
      lmi = ad::cadd(lmi, ad::cembed(qh, n + 1, n + 1, 0, n));
      lmi = ad::cadd(lmi, ad::cembed(ad::ctranspose(qh), n + 1, n + 1, n, 0));
      lmi = ad::cadd(lmi, CVar{ad::embed(br, n + 1, n + 1, n, n), std::nullopt});
      violation = ad::add(violation, ad::relu(ad::neg(ad::min_eig(lmi))));
    }
  }
  LossTerms t;
  t.sr = ad::min_all(stack_entries(tape, terms));
  t.pen1 = power_penalty_var(dec, scene);
  t.pen2 = spacing_penalty_var(tape, dec.positions, scene, config.spacing);
  t.pen3 = ad::scale(violation, 1.0 / (nk * ni));
  t.loss = ad::add(ad::add(ad::add(ad::neg(t.sr), ad::scale(t.pen1, u.u1)),
                           ad::scale(t.pen2, u.u2)),
                   ad::scale(t.pen3, u.u3));
  return t;
}

double power_penalty(const Solution& sol, const Scene& scene) {
  const double v = std::max(sol.total_power() / scene.power - 1.0, 0.0);
  return v * v;
}

double spacing_penalty(const PinchLayout& layout, const Scene& scene, SpacingForm form) {
  const double delta = scene.min_spacing;
  if (!(delta > 0.0)) return 0.0;
  const int n = layout.num_waveguides();
  const int m = layout.pas_per_waveguide();
  double acc = 0.0;
  int count = 0;
  if (form == SpacingForm::Within) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c + 1 < m; ++c) {
        const double v = std::max(1.0 - (layout.x(r, c + 1) - layout.x(r, c)) / delta, 0.0);
        acc += v * v;
        ++count;
      }
  } else {
    for (int r = 0; r + 1 < n; ++r)
      for (int c = 0; c < m; ++c) {
        const double v = std::max(1.0 - (layout.x(r + 1, c) - layout.x(r, c)) / delta, 0.0);
        acc += v * v;
        ++count;
      }
  }
  return count == 0 ? 0.0 : acc / count;
}

double lmi_penalty(const Solution& sol, const Scene& scene, const UncertaintySpec& unc,
                   LmiForm form) {
  if (!sol.has_aux()) throw std::invalid_argument("LMI penalty needs auxiliaries");
  const ChannelSet ch = channel_matrices(scene, sol.layout);
  double acc = 0.0;
  const int ni = scene.num_bobs();
  const int nk = scene.num_eves();
  for (int i = 0; i < ni; ++i) {
    const CMatrix q = interference_covariance(sol, i);
    for (int k = 0; k < nk; ++k) {
      const CMatrix m = lmi_matrix(q, ch.eve.row(k).transpose(), unc.phi_inv[k],
                                   sol.aux_tau(k, i), sol.aux_lambda(k, i), scene.noise_eve, form);
      acc += std::max(-min_eig(m / scene.noise_eve).value, 0.0);
    }
  }
  return acc / (ni * nk);
}

Solution project_to_budget(const Solution& sol, const Scene& scene) {
  const double total = sol.total_power();
  if (!(total > scene.power)) return sol;
  const double c2 = scene.power / total;
  Solution out = sol;
  out.beams *= std::sqrt(c2);
  out.an_cov *= c2;
  if (out.has_aux()) {
    out.aux_tau *= c2;
    out.aux_lambda = (scene.noise_eve + c2 * (sol.aux_lambda.array() - scene.noise_eve)).matrix();
  }
  return out;
}

double evaluate_solution(const Solution& sol, const Scene& scene, const TrainConfig& config,
                         double* pen3) {
  const ChannelSet ch = channel_matrices(scene, sol.layout);
  if (config.mode == TrainMode::Perfect) {
    if (pen3) *pen3 = 0.0;
    return secrecy_rate(ch, sol, scene);
  }
  const UncertaintySpec unc =
      build_uncertainty(scene, sol.layout, config.sigma_xyz, config.eps_rel);
  if (pen3) *pen3 = lmi_penalty(sol, scene, unc, config.lmi);
  return robust_secrecy_rate(ch, sol, scene, unc, config.numerator);
}

void calibrate_gains(const Tensor& raw, const Scene& scene, TrainConfig& config) {
  const int n = scene.num_waveguides;
  const std::size_t beam_end = static_cast<std::size_t>(2 * n * scene.num_bobs());
  const std::size_t an_end = beam_end + static_cast<std::size_t>(2 * n * n);
  double beam = 0.0, an = 0.0;
  for (std::size_t j = 0; j < an_end; ++j) (j < beam_end ? beam : an) += raw.data[j] * raw.data[j];
  if (config.init_beam_fraction > 0.0 && beam > 0.0)
    config.beam_gain = std::sqrt(config.init_beam_fraction / beam);
  // R_m = G G^H, so the AN power is the squared Frobenius norm of G.
  if (config.init_an_fraction > 0.0 && an > 0.0)
    config.an_gain = std::sqrt(config.init_an_fraction / an);
}

TrainResult train_scenario(const Scene& scene, const TrainConfig& config_in) {
  scene.validate();
  TrainConfig config = config_in;
  if (config.epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  if (scene.num_waveguides * scene.pas_per_waveguide == 1)
    config.position_gain = config.single_pa_position_gain;
  const bool robust = config.mode == TrainMode::Robust;
  const NetworkConfig net_cfg =
      NetworkConfig::for_scene(scene, config.mode, config.hidden, config.seed);
  Mlp net = Mlp::init(net_cfg);
  const Tensor features = scene_features(scene);
  if (config.scale_outputs) calibrate_gains(net.forward(features), scene, config);
  const double power_dbm = watt_to_dbm(scene.power);
  const double sigma2 = std::max(config.sigma_xyz.x(), config.sigma_xyz.y());
  AdamState adam;

  TrainResult result;
  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Solution& raw_sol, int epoch, double pen2, bool final) {
    const Solution sol = project_to_budget(raw_sol, scene);
    double pen3 = 0.0;
    const double value = evaluate_solution(sol, scene, config, &pen3);
    const bool feasible = pen2 == 0.0 && (!robust || pen3 <= config.lmi_tol);
    if ((feasible && (!result.feasible || value > best)) || (final && !result.feasible)) {
      if (feasible) result.feasible = true;
      best = value;
      result.solution = sol;
      result.sr = value;
      result.pen3 = pen3;
      result.best_epoch = epoch;
    }
    return std::make_pair(value, pen3);
  };

  if (config.epochs == 0) {
    const Solution sol = decode_solution(net.forward(features), scene, config);
    consider(sol, 0, spacing_penalty(sol.layout, scene, config.spacing), true);
    return result;
  }

  result.trace.reserve(static_cast<std::size_t>(config.epochs));
  std::vector<Tensor> grads(net.params.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    const PenaltyWeights u = penalty_schedule(epoch, power_dbm, sigma2);
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(net.params.size());
    for (std::size_t j = 0; j < net.params.size(); ++j)
      leaves.push_back(tape.variable(std::move(net.params[j]), std::move(grads[j])));
    const Var input = tape.constant(features);
    const Var raw = mlp_forward(tape, leaves, input);
    const DecodedVars dec = decode_outputs(tape, raw, scene, config);
    const LossTerms terms = robust ? loss_robust(tape, dec, scene, u, config)
                                   : loss_perfect(tape, dec, scene, u, config.spacing);
    const Solution sol = to_solution(dec, scene);
    const double pen2 = terms.pen2.scalar();
    const double value = consider(sol, epoch, pen2, epoch + 1 == config.epochs).first;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.sr = value;
    rec.loss = terms.loss.scalar();
    rec.pen1 = terms.pen1.scalar();
    rec.pen2 = pen2;
    rec.pen3 = terms.pen3.scalar();
    rec.lr = lr;
    result.trace.push_back(rec);

    tape.backward(terms.loss);
    for (std::size_t j = 0; j < leaves.size(); ++j) {
      net.params[j] = tape.take_value(leaves[j]);
      grads[j] = tape.take_grad(leaves[j]);
    }
    adam_step(net.params, grads, adam, lr);
  }
  return result;
}

}  // namespace pinchsec
