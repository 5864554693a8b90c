#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pinchsec/harness.hpp"

namespace py = pybind11;
using namespace pinchsec;

namespace {

TrainMode parse_mode(const std::string& s) {
  if (s == "perfect") return TrainMode::Perfect;
  if (s == "robust") return TrainMode::Robust;
  throw std::invalid_argument("mode must be 'perfect' or 'robust'");
}

NumeratorMode parse_numerator(const std::string& s) {
  if (s == "conservative") return NumeratorMode::Conservative;
  if (s == "nominal") return NumeratorMode::Nominal;
  throw std::invalid_argument("numerator must be 'conservative' or 'nominal'");
}

py::dict solution_dict(const Solution& sol) {
  py::dict d;
  d["beams"] = sol.beams;
  d["an_cov"] = sol.an_cov;
  d["positions"] = sol.layout.x;
  if (sol.has_aux()) {
    d["tau"] = sol.aux_tau;
    d["lam"] = sol.aux_lambda;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_pinchsec, m) {
  m.doc() = "Secure beamforming and pinching-antenna placement";

  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ValueError);
  py::register_exception<NotPsdError>(m, "NotPsdError", PyExc_ValueError);

  m.def("dbm_to_watt", &dbm_to_watt);
  m.def("watt_to_dbm", &watt_to_dbm);
  m.def("guided_wavelength", &guided_wavelength, py::arg("carrier"), py::arg("neff"));
  m.def("free_space_wavelength", &free_space_wavelength, py::arg("carrier"));

  py::class_<Scene>(m, "Scene")
      .def(py::init([]() { return default_scene(); }))
      .def_readwrite("side", &Scene::side)
      .def_readwrite("height", &Scene::height)
      .def_readwrite("num_waveguides", &Scene::num_waveguides)
      .def_readwrite("pas_per_waveguide", &Scene::pas_per_waveguide)
      .def_readwrite("bobs", &Scene::bobs)
      .def_readwrite("eves", &Scene::eves)
      .def_readwrite("noise_bob", &Scene::noise_bob)
      .def_readwrite("noise_eve", &Scene::noise_eve)
      .def_readwrite("carrier", &Scene::carrier)
      .def_readwrite("neff", &Scene::neff)
      .def_readwrite("power", &Scene::power)
      .def_readwrite("min_spacing", &Scene::min_spacing)
      .def_readwrite("feed_x", &Scene::feed_x)
      .def("validate", &Scene::validate);

  m.def("sample_scene",
        [](const Scene& base, int bobs, int eves, std::uint64_t seed, std::uint64_t index) {
          std::mt19937_64 rng = scenario_rng(seed, index);
          return sample_scene(base, bobs, eves, rng);
        },
        py::arg("base"), py::arg("bobs") = 1, py::arg("eves") = 1, py::arg("seed") = 0,
        py::arg("index") = 0);

  m.def("channel_matrices",
        [](const Scene& s, const Eigen::MatrixXd& x) {
          const ChannelSet ch = channel_matrices(s, make_layout(s, x));
          return py::make_tuple(ch.bob, ch.eve);
        },
        py::arg("scene"), py::arg("positions"),
        "(H_B, H_E) for PA positions given as an N x M array");

  m.def("single_waveguide",
        [](const Scene& s) {
          const AlternateResult r = alternate_optimize(s);
          py::dict d;
          d["x_p"] = r.state.x_p;
          d["w_power"] = r.state.w_power;
          d["an_power"] = r.state.an_power;
          d["sr"] = r.state.sr;
          d["iterations"] = r.iterations;
          d["trace"] = r.sr_trace;
          return d;
        },
        py::arg("scene"), "closed-form alternating solver for N = M = I = K = 1");
  m.def("optimal_pa_position",
        [](const Scene& s, double w, double an) {
          const PositionResult r = optimal_pa_position(s, w, an);
          return py::make_tuple(r.x_p, r.sr);
        },
        py::arg("scene"), py::arg("w_power"), py::arg("an_power"));
  m.def("optimal_power_split",
        [](const Scene& s, double x) {
          const PowerSplit p = optimal_power_split(s, x);
          return py::make_tuple(p.w_power, p.an_power);
        },
        py::arg("scene"), py::arg("x_p"));

  m.def("lmi_matrix",
        [](const CMatrix& q, const CVector& h, const CMatrix& phi_inv, double tau, double lam,
           double noise, bool printed) {
          return lmi_matrix(q, h, phi_inv, tau, lam, noise,
                            printed ? LmiForm::Printed : LmiForm::Sound);
        },
        py::arg("q"), py::arg("h_hat"), py::arg("phi_inv"), py::arg("tau"), py::arg("lam"),
        py::arg("noise_eve"), py::arg("printed") = false);
  m.def("min_eig", [](const CMatrix& a) { return min_eig(a).value; });

  m.def("train",
        [](const Scene& s, const std::string& mode, double sigma2, int epochs, std::uint64_t seed,
           bool an_enabled, const std::string& numerator, std::vector<int> hidden) {
          TrainConfig c;
          c.mode = parse_mode(mode);
          c.sigma_xyz = Vec3(sigma2, sigma2, 0.0);
          c.epochs = epochs;
          c.seed = seed;
          c.an_enabled = an_enabled;
          c.numerator = parse_numerator(numerator);
          c.hidden = std::move(hidden);
          TrainResult r;
          {
            py::gil_scoped_release release;
            r = train_scenario(s, c);
          }
          py::dict d = solution_dict(r.solution);
          d["sr"] = r.sr;
          d["pen3"] = r.pen3;
          d["feasible"] = r.feasible;
          d["best_epoch"] = r.best_epoch;
          std::vector<double> sr, loss;
          for (const EpochRecord& e : r.trace) {
            sr.push_back(e.sr);
            loss.push_back(e.loss);
          }
          d["sr_trace"] = sr;
          d["loss_trace"] = loss;
          return d;
        },
        py::arg("scene"), py::arg("mode") = "perfect", py::arg("sigma2") = 0.05,
        py::arg("epochs") = 1500, py::arg("seed") = 0, py::arg("an_enabled") = true,
        py::arg("numerator") = "conservative",
        py::arg("hidden") = std::vector<int>{256, 256, 256, 256});

  m.def("sweep",
        [](const std::string& axis, std::vector<double> values, int mc, const std::string& mode,
           int epochs, std::uint64_t seed, bool paired, const Scene& base, int bobs, int eves,
           int threads) {
          ExperimentConfig e;
          e.base = base;
          e.num_bobs = bobs;
          e.num_eves = eves;
          e.axis = axis;
          e.values = std::move(values);
          e.mc = mc;
          e.seed = seed;
          e.paired_no_an = paired;
          e.threads = threads;
          e.train.mode = parse_mode(mode);
          e.train.epochs = epochs;
          std::vector<SweepPoint> pts;
          {
            py::gil_scoped_release release;
            pts = run_sweep(e);
          }
          py::list out;
          for (const SweepPoint& p : pts) {
            py::dict d;
            d["value"] = p.value;
            d["sr"] = p.sr.values;
            d["sr_true"] = p.sr_true.values;
            d["sr_no_an"] = p.sr_no_an.values;
            d["mean"] = p.sr.mean;
            out.append(d);
          }
          return out;
        },
        py::arg("axis"), py::arg("values"), py::arg("mc") = 20, py::arg("mode") = "perfect",
        py::arg("epochs") = 1500, py::arg("seed") = 0, py::arg("paired") = false,
        py::arg("base") = default_scene(), py::arg("bobs") = 1, py::arg("eves") = 1,
        py::arg("threads") = 1);

  m.def("gradcheck",
        [](std::uint64_t seed) {
          GradcheckOptions o;
          o.seed = seed;
          py::list out;
          for (const GradcheckEntry& e : run_gradcheck(o))
            out.append(py::make_tuple(e.name, e.checked, e.max_rel_error, e.pass));
          return out;
        },
        py::arg("seed") = 0, "(op, checked, max_rel_error, pass) per operation kind");
}
