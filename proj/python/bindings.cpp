#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fvselect/experiment.hpp"
#include "fvselect/fleming_viot.hpp"
#include "fvselect/killed_process.hpp"
#include "fvselect/measures_stats.hpp"
#include "fvselect/nbbm.hpp"
#include "fvselect/qsd_analytics.hpp"

namespace py = pybind11;
using namespace fvselect;

namespace {

ExperimentKind kind_of(const std::string& name) {
  const auto k = parse_experiment(name);
  if (!k) throw py::value_error("unknown experiment '" + name + "'");
  return *k;
}

// Round-trips through JSON text so Python dicts use the same parser and
// diagnostics as config files.
ExperimentConfig config_from(const std::string& experiment, const py::object& cfg) {
  const auto kind = kind_of(experiment);
  if (cfg.is_none()) return default_config(kind);
  if (py::isinstance<py::str>(cfg)) return parse_config(cfg.cast<std::string>(), kind);
  const auto text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
  return parse_config(text, kind);
}

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fleming-Viot selection experiments: analytics, samplers and the run/verify pipeline";
  m.attr("__version__") = FVSELECT_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RunError>(m, "RunError", PyExc_RuntimeError);
  py::register_exception<DegeneracyError>(m, "DegeneracyError", PyExc_RuntimeError);

  py::class_<QsdParams>(m, "QsdParams")
      .def(py::init(&make_qsd), py::arg("lam"))
      .def_readonly("lam", &QsdParams::lambda)
      .def_readonly("beta", &QsdParams::beta)
      .def_readonly("norm_const", &QsdParams::norm_const)
      .def("is_minimal", &QsdParams::is_minimal)
      .def("density", [](const QsdParams& q, double x) { return qsd_density(q, x); })
      .def("cdf", [](const QsdParams& q, double x) { return qsd_cdf(q, x); })
      .def("mean", [](const QsdParams& q) { return qsd_mean(q); })
      .def("sample", [](const QsdParams& q, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return qsd_sample(q, n, rng);
      }, py::arg("n"), py::arg("seed"))
      .def("__repr__", [](const QsdParams& q) {
        return "QsdParams(lam=" + std::to_string(q.lambda) + ")";
      });

  m.def("survival_prob", py::overload_cast<double, double>(&survival_prob), py::arg("x0"), py::arg("t"));
  m.def("log_survival_prob",
        [](double x0, double t) { return log_survival_prob({x0, t}); }, py::arg("x0"), py::arg("t"));
  m.def("hitting_mgf", &hitting_mgf, py::arg("x"), py::arg("z"));
  m.def("green_g1", &green_g1, py::arg("x"));
  m.def("green_apply",
        [](const std::function<double(double)>& f, const std::vector<double>& grid) {
          return green_apply(f, grid);
        },
        py::arg("f"), py::arg("x_grid"));
  m.def("t_y_qsd", &t_y_qsd, py::arg("q"), py::arg("y"));
  m.def("t_y_pointmass", &t_y_pointmass, py::arg("x"), py::arg("y"));
  m.def("tail_rate",
        [](const std::vector<double>& xs, double frac) { return tail_rate(xs, frac); },
        py::arg("samples"), py::arg("fit_fraction") = 0.05);

  m.def("w1",
        [](std::vector<double> a, std::vector<double> b) {
          return w1(EmpiricalMeasure(std::move(a)), EmpiricalMeasure(std::move(b)));
        },
        py::arg("a"), py::arg("b"));
  m.def("w1_to_qsd",
        [](std::vector<double> a, double lam) {
          return w1(EmpiricalMeasure(std::move(a)), qsd_law(make_qsd(lam)));
        },
        py::arg("samples"), py::arg("lam") = kLambdaMin);
  m.def("ks",
        [](std::vector<double> a, std::vector<double> b) {
          return ks(EmpiricalMeasure(std::move(a)), EmpiricalMeasure(std::move(b)));
        },
        py::arg("a"), py::arg("b"));

  m.def("iota", &iota, py::arg("n"));
  m.def("lambda_lower_bound", &lambda_lower_bound, py::arg("n"));
  m.def("wave_profile", [](double c, double x) { return wave_profile(c)(x); }, py::arg("c"), py::arg("x"));
  m.attr("MIN_WAVE_SPEED") = kMinWaveSpeed;

  m.def("flow_theta",
        [](double x0, double t, std::size_t n, double dt, std::uint64_t seed) {
          Rng rng(seed);
          py::gil_scoped_release nogil;
          const auto e = flow_theta(point_sampler(x0), t, n, dt, rng);
          return std::make_pair(e.particles, e.log_survival);
        },
        py::arg("x0"), py::arg("t"), py::arg("n"), py::arg("dt") = 0.01, py::arg("seed") = 1,
        "Survivors at time t from a point mass and -ln(survival fraction).");

  m.def("experiment_names", &experiment_names);
  m.def("default_config",
        [](const std::string& experiment) { return to_py(default_config(kind_of(experiment)).to_json()); },
        py::arg("experiment"));
  m.def("run",
        [](const std::string& experiment, const py::object& config, std::optional<std::uint64_t> seed,
           std::optional<std::string> out, std::size_t workers) {
          auto c = config_from(experiment, config);
          if (seed) c.seed = *seed;
          if (out) c.output_dir = *out;
          std::vector<std::filesystem::path> files;
          {
            py::gil_scoped_release nogil;
            files = run(c, {workers, true});
          }
          return files;
        },
        py::arg("experiment"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
        py::arg("out") = py::none(), py::arg("workers") = 0,
        "Runs an experiment; config is a dict, config text, or None for defaults.");
  m.def("verify",
        [](const std::filesystem::path& dir) { return to_py(verify(dir).to_json()); },
        py::arg("run_dir"));
}
