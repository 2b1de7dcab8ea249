#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wchj/analysis.hpp"
#include "wchj/cli.hpp"
#include "wchj/error.hpp"
#include "wchj/parallel.hpp"
#include "wchj/reference.hpp"

namespace py = pybind11;
using namespace wchj;

namespace {

// (nodes, d) array of the field values.
py::array_t<double> to_array(const GridField& f) {
  py::array_t<double> a({static_cast<py::ssize_t>(f.grid().node_count()),
                         static_cast<py::ssize_t>(f.d())});
  auto v = f.values();
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> node_points(const Grid& g) {
  py::array_t<double> a({static_cast<py::ssize_t>(g.node_count()),
                         static_cast<py::ssize_t>(g.dim())});
  double* out = a.mutable_data();
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const Point x = g.point(k);
    for (int c = 0; c < g.dim(); ++c) out[k * g.dim() + c] = x[c];
  }
  return a;
}

GridField from_array(const RunConfig& cfg, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  const Grid& g = cfg.scenario.grid;
  const int d = cfg.scenario.sys.d();
  if (a.ndim() != 2 || a.shape(0) != static_cast<py::ssize_t>(g.node_count()) || a.shape(1) != d) {
    throw Error(ErrorCode::ShapeMismatch, "expected an array of shape (nodes, d)");
  }
  GridField f(g, d, std::vector<double>(a.data(), a.data() + a.size()), "python");
  return g.periodic() ? f : f.with_linear_extrapolation();
}

RunConfig config_from(const std::string& text) {
  RunConfig cfg = parse_config(text, "<python>");
  if (!cfg.coupling_error.empty()) throw Error(ErrorCode::Config, cfg.coupling_error);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_wchj, m) {
  m.doc() = "Twisted Lax-Oleinik operators for weakly coupled Hamilton-Jacobi systems";

  py::register_exception<Error>(m, "WchjError", PyExc_RuntimeError);

  m.def("set_threads", &set_thread_count, py::arg("count"));
  m.def("scenario_names", &scenario_names);

  m.def(
      "exp_neg",
      [](const Matrix& b, double tau) { return exp_neg(CouplingMatrix::validate(b), tau); },
      py::arg("b"), py::arg("tau"), "e^{-tau B} for a validated coupling matrix B.");
  m.def(
      "validate_coupling",
      [](const Matrix& b) {
        try {
          CouplingMatrix::validate(b);
          return py::make_tuple(true, std::string(), 0, 0);
        } catch (const CouplingError& e) {
          return py::make_tuple(false, std::string(to_string(e.code())), e.row(), e.col());
        }
      },
      py::arg("b"), "(ok, code, row, col); indices are 1-based.");
  m.def("appendix_exact_W", &appendix_exact_W, py::arg("t"), py::arg("x"), py::arg("p"),
        py::arg("dim") = 1);
  m.def("appendix_residual", &appendix_residual, py::arg("t"), py::arg("p"), py::arg("dim") = 1);

  py::class_<RunConfig>(m, "Config")
      .def(py::init(&config_from), py::arg("json") = "{}")
      .def_static("load", [](const std::string& path) {
        RunConfig cfg = load_config(path);
        if (!cfg.coupling_error.empty()) throw Error(ErrorCode::Config, cfg.coupling_error);
        return cfg;
      })
      .def_property_readonly("scenario", [](const RunConfig& c) { return c.scenario.name; })
      .def_property_readonly("T", &RunConfig::final_time)
      .def_property_readonly("d", [](const RunConfig& c) { return c.scenario.sys.d(); })
      .def_property_readonly("grid", [](const RunConfig& c) { return c.scenario.grid.describe(); })
      .def("points", [](const RunConfig& c) { return node_points(c.scenario.grid); })
      .def("u0", [](const RunConfig& c) { return to_array(c.scenario.u0()); })
      .def(
          "step",
          [](const RunConfig& c, double t, std::optional<py::array_t<double>> u) {
            GridField f = u ? from_array(c, *u) : c.scenario.u0();
            return to_array(operator_step(f, t, c.scenario.sys, c.scenario.scheme).output);
          },
          py::arg("t"), py::arg("u") = py::none(), "One step of the configured operator.")
      .def(
          "iterate",
          [](const RunConfig& c, int n, std::optional<double> T, std::optional<py::array_t<double>> u) {
            GridField f = u ? from_array(c, *u) : c.scenario.u0();
            return to_array(iterate_dyadic(f, T ? *T : c.final_time(), n, c.scenario.sys,
                                           c.scenario.scheme));
          },
          py::arg("n"), py::arg("T") = py::none(), py::arg("u") = py::none())
      .def(
          "iterate_partition",
          [](const RunConfig& c, std::vector<double> times) {
            return to_array(
                iterate_partition(c.scenario.u0(), times, c.scenario.sys, c.scenario.scheme));
          },
          py::arg("times"))
      .def(
          "reference",
          [](const RunConfig& c, std::optional<double> T) {
            const double t = T ? *T : c.final_time();
            return to_array(lf_solve(c.scenario.u0(), t, c.scenario.sys, c.scenario.cfl).final_field);
          },
          py::arg("T") = py::none(), "Lax-Friedrichs reference on the configured grid.")
      .def(
          "converge",
          [](const RunConfig& c) {
            return run_convergence(c.scenario, c.run.n_min, c.run.n_max).json();
          },
          "JSON convergence report.")
      .def(
          "properties",
          [](const RunConfig& c, std::optional<std::uint64_t> seed, std::optional<int> random_fields) {
            PropertyOptions po;
            po.random_fields = random_fields ? *random_fields : c.run.random_fields;
            po.random_m = c.run.random_m;
            po.random_t = c.run.random_t;
            return run_properties(c.scenario, seed ? *seed : c.run.seed, po).json();
          },
          py::arg("seed") = py::none(), py::arg("random_fields") = py::none(),
          "JSON property report.")
      .def(
          "appendix",
          [](const RunConfig& c, std::vector<double> times) {
            if (times.empty()) times = c.run.times.empty() ? std::vector<double>{0.25, 0.5, 1.0} : c.run.times;
            return run_appendix(c.scenario, times).json();
          },
          py::arg("times") = std::vector<double>{}, "JSON appendix report.");

  m.def(
      "run_command",
      [](const std::string& command, std::optional<std::string> config, bool strict,
         std::optional<std::string> out_dir) {
        CliOptions opt;
        opt.strict = strict;
        opt.out_dir = out_dir;
        std::ostringstream out, err;
        const int code = run_command(command, config, opt, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config") = py::none(), py::arg("strict") = false,
      py::arg("out_dir") = py::none(), "(exit code, stdout, stderr) of a CLI subcommand.");
}
