#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qfield/chain.hpp"
#include "qfield/error.hpp"
#include "qfield/kernel.hpp"
#include "qfield/measure.hpp"
#include "qfield/params.hpp"
#include "qfield/qpoly.hpp"
#include "qfield/serialize.hpp"
#include "qfield/verify.hpp"

namespace py = pybind11;
using namespace qfield;

namespace {

Normalization parse_norm(const std::string& s) {
  if (s == "monic") return Normalization::Monic;
  if (s == "orthonormal") return Normalization::Orthonormal;
  throw DomainError("normalization must be 'monic' or 'orthonormal'");
}

}  // namespace

PYBIND11_MODULE(_qfield, m) {
  m.doc() = "q-Gaussian stationary fields";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("rho", &ModelParams::rho)
      .def_readonly("R", &ModelParams::R)
      .def_readonly("q", &ModelParams::q)
      .def_readonly("a", &ModelParams::a)
      .def_readonly("A", &ModelParams::A)
      .def_readonly("B", &ModelParams::B)
      .def_readonly("C", &ModelParams::C)
      .def_readonly("D", &ModelParams::D)
      .def_readonly("gamma", &ModelParams::gamma)
      .def_readonly("support_halfwidth", &ModelParams::support_halfwidth)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(rho=" + format_double(p.rho) + ", R=" + format_double(p.R) +
               ", q=" + format_double(p.q) + ")";
      });

  m.def("derive_params", &derive_params, py::arg("rho"), py::arg("R"));
  m.def("params_from_q", &params_from_q, py::arg("rho"), py::arg("q"));
  m.def("r_from_q", &r_from_q, py::arg("rho"), py::arg("q"));
  m.def("params_residual", &params_residual);
  m.def("solve_correlations",
        [](double rho, double r2, std::size_t K) { return solve_correlations(rho, r2, K).values; },
        py::arg("rho"), py::arg("r2"), py::arg("K"));

  m.def("q_integer", &q_integer, py::arg("n"), py::arg("q"));
  m.def(
      "poly_eval",
      [](double q, std::size_t n, double x, const std::string& norm) {
        return PolyFamily(q, parse_norm(norm), std::max<std::size_t>(n, 1)).eval(n, x);
      },
      py::arg("q"), py::arg("n"), py::arg("x"), py::arg("normalization") = "monic");

  py::class_<Measure>(m, "Measure")
      .def(py::init<double>(), py::arg("q"))
      .def_property_readonly("q", &Measure::q)
      .def_property_readonly("support_halfwidth", &Measure::support_halfwidth)
      .def("density", &Measure::density)
      .def("cdf", &Measure::cdf)
      .def("cdf_left", &Measure::cdf_left)
      .def("quantile", &Measure::quantile)
      .def("sample", &Measure::sample, py::arg("seed"), py::arg("count"));
  m.def("density", py::overload_cast<double, double>(&density), py::arg("q"), py::arg("x"));
  m.def("moments", &moments, py::arg("q"), py::arg("n_max"));
  m.def(
      "quadrature",
      [](double q, std::size_t order) {
        const auto r = build_quadrature(q, order);
        return py::make_tuple(r.nodes, r.weights);
      },
      py::arg("q"), py::arg("order"));

  m.def("kernel_product", py::overload_cast<double, double, double, double>(&kernel_product),
        py::arg("q"), py::arg("rho"), py::arg("x"), py::arg("y"));
  m.def(
      "kernel",
      [](double q, double rho, double x, double y, const std::string& method) {
        const KernelMethod km = parse_kernel_method(method);
        const KernelEvaluation ev = TransitionKernel(q, rho, km).evaluate(x, y, km);
        return py::dict(py::arg("value") = ev.value, py::arg("method") = std::string(to_string(ev.method)),
                        py::arg("truncation") = ev.truncation, py::arg("residual") = ev.residual);
      },
      py::arg("q"), py::arg("rho"), py::arg("x"), py::arg("y"), py::arg("method") = "product");

  m.def(
      "simulate_chain",
      [](double rho, double R, std::size_t length, std::uint64_t seed) {
        return simulate_chain(derive_params(rho, R), length, seed).values;
      },
      py::arg("rho"), py::arg("R"), py::arg("length"), py::arg("seed") = kDefaultSeed);
  m.def(
      "simulate_counterexample",
      [](double rho, double a, std::size_t length, std::uint64_t seed) {
        return simulate_counterexample(rho, a, length, seed).values;
      },
      py::arg("rho"), py::arg("a"), py::arg("length"), py::arg("seed") = kDefaultSeed);
  m.def(
      "verify_json",
      [](double rho, double R, std::size_t length, std::uint64_t seed) {
        return dump(to_json(verify_chain(simulate_chain(derive_params(rho, R), length, seed))));
      },
      py::arg("rho"), py::arg("R"), py::arg("length"), py::arg("seed") = kDefaultSeed);
  m.attr("DEFAULT_SEED") = kDefaultSeed;
}
