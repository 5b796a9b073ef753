#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "foxh/analysis.hpp"
#include "foxh/errors.hpp"
#include "foxh/fbm.hpp"
#include "foxh/gfhp.hpp"
#include "foxh/io.hpp"

namespace py = pybind11;
using namespace foxh;

namespace {

WrightParams to_params(const std::vector<std::pair<double, double>>& upper,
                       const std::vector<std::pair<double, double>>& lower) {
  WrightParams p;
  for (auto [a, alpha] : upper) p.upper.push_back({a, alpha});
  for (auto [b, beta] : lower) p.lower.push_back({b, beta});
  return p;
}

py::array_t<double> path_matrix(const TrajectorySet& ts) {
  py::array_t<double> out({ts.n_paths, ts.row_size()});
  std::copy(ts.values.begin(), ts.values.end(), out.mutable_data());
  return out;
}

py::array_t<double> grid_times(const TimeGrid& grid) {
  py::array_t<double> out(grid.n_steps + 1);
  auto* t = out.mutable_data();
  for (int k = 0; k <= grid.n_steps; ++k) t[k] = grid.time(k);
  return out;
}

TrajectorySet from_matrix(py::array_t<double, py::array::c_style | py::array::forcecast> values, double t_max,
                          double hurst) {
  if (values.ndim() != 2 || values.shape(1) < 2)
    throw Error(ErrorKind::InvalidArgument, "expected a (n_paths, n_steps + 1) array");
  TrajectorySet ts;
  ts.grid = make_grid(t_max, static_cast<int>(values.shape(1) - 1));
  ts.n_paths = static_cast<std::size_t>(values.shape(0));
  ts.values.assign(values.data(), values.data() + values.size());
  ts.hurst = hurst;
  return ts;
}

std::vector<double> to_vector(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  return {a.data(), a.data() + a.size()};
}

py::object json_to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_foxh, m) {
  m.doc() = "Generalized Fox-H processes: densities, simulation and path statistics.";

  static py::handle error_type = py::exception<Error>(m, "FoxhError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::reinterpret_borrow<py::object>(error_type)(e.what());
      instance.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    }
  });

  py::class_<FhdamSpec>(m, "Spec")
      .def(py::init([](const std::vector<std::pair<double, double>>& upper,
                       const std::vector<std::pair<double, double>>& lower) {
             return validate_params(to_params(upper, lower));
           }),
           py::arg("upper"), py::arg("lower"))
      .def_property_readonly("class_tag", [](const FhdamSpec& s) { return std::string(to_string(s.class_tag())); })
      .def_property_readonly("entire", &FhdamSpec::entire)
      .def_property_readonly("constants", [](const FhdamSpec& s) { return json_to_python(to_json(s.constants())); })
      .def("gwf", [](const FhdamSpec& s, double z) { return gwf_eval(s, z); }, py::arg("z"))
      .def("density", [](const FhdamSpec& s, double tau) { return density_eval(s, tau); }, py::arg("tau"))
      .def("moment", [](const FhdamSpec& s, int l) { return fhdam_moment(s, l); }, py::arg("order"))
      .def("laplace_check", [](const FhdamSpec& s, double x) {
        const auto r = laplace_identity_check(s, x);
        return py::make_tuple(r.lhs, r.rhs);
      }, py::arg("s"));

  py::class_<GfhpConfig>(m, "Process")
      .def_static(
          "from_json",
          [](const std::string& text) {
            return build_config(parse_run_config(nlohmann::json::parse(text)).process);
          },
          py::arg("document"), "Builds the process block of a run configuration document.")
      .def_static(
          "from_file", [](const std::string& path) { return build_config(load_run_config(path).process); },
          py::arg("path"))
      .def_property_readonly("hurst", [](const GfhpConfig& c) { return c.hurst; })
      .def_property_readonly("spec", [](const GfhpConfig& c) { return c.spec; })
      .def(
          "char_fn",
          [](const GfhpConfig& c, const std::vector<double>& times, const std::vector<double>& lambda) {
            return char_fn(c, times, lambda);
          },
          py::arg("times"), py::arg("lam"))
      .def(
          "density",
          [](const GfhpConfig& c, const std::vector<double>& times, const std::vector<double>& x, int nodes) {
            return joint_density(c, times, x, nodes);
          },
          py::arg("times"), py::arg("x"), py::arg("nodes") = 256)
      .def("moment", &analytic_moment, py::arg("t"), py::arg("order"))
      .def("covariance", &covariance, py::arg("t"), py::arg("s"))
      .def("berman", [](const GfhpConfig& c) { return json_to_python(to_json(berman_check(c))); })
      .def(
          "simulate",
          [](const GfhpConfig& c, double t_max, int n_steps, std::size_t n_paths, std::uint64_t seed,
             const std::string& mode, const std::string& generator, int threads) {
            SimOptions options;
            const auto g = parse_generator(generator);
            const auto sm = parse_sim_mode(mode);
            if (!g || !sm) throw Error(ErrorKind::InvalidArgument, "unknown mode or generator");
            options.generator = *g;
            options.threads = threads;
            TrajectorySet ts;
            {
              py::gil_scoped_release release;
              ts = simulate(c, make_grid(t_max, n_steps), n_paths, seed, *sm, options);
            }
            return py::make_tuple(grid_times(ts.grid), path_matrix(ts));
          },
          py::arg("t_max"), py::arg("n_steps"), py::arg("n_paths"), py::arg("seed"), py::arg("mode") = "scale",
          py::arg("generator") = "circulant", py::arg("threads") = 0,
          "Returns (times, paths) with paths of shape (n_paths, n_steps + 1).");

  m.def(
      "msd",
      [](py::array_t<double> paths, double t_max, double hurst) {
        const auto ts = from_matrix(paths, t_max, hurst);
        return json_to_python(to_json(msd(ts, dyadic_lags(ts.grid))));
      },
      py::arg("paths"), py::arg("t_max"), py::arg("hurst") = 0.5);
  m.def(
      "ks_two_sample",
      [](py::array_t<double> a, py::array_t<double> b) {
        const auto r = ks_two_sample(to_vector(a), to_vector(b));
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "trajectory_csv",
      [](py::array_t<double> paths, double t_max) {
        std::ostringstream out;
        write_trajectory_csv(out, from_matrix(paths, t_max, 0.5));
        return out.str();
      },
      py::arg("paths"), py::arg("t_max"));
  m.def("kernel_inner_product", &kernel_inner_product, py::arg("hurst"), py::arg("t1"), py::arg("t2"));
  m.attr("schema_version") = kSchemaVersion;
}
