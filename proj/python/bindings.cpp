#include "conjsim/cli.hpp"
#include "conjsim/io.hpp"
#include "conjsim/selftest.hpp"
#include "conjsim/simfamily.hpp"
#include "conjsim/sixstate.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace conjsim;

namespace {

// Reports cross the boundary as JSON text; the Python side parses them.
template <typename T>
std::string report(const T& value) {
  return io::dump(io::to_json(value));
}

StateVector as_state(const Vector& amplitudes, std::vector<std::size_t> dims) {
  if (dims.empty()) dims = {static_cast<std::size_t>(amplitudes.size())};
  return StateVector::normalized(dims, amplitudes);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Complex-conjugate simulation families, self-testing and six-state QKD";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<io::FormatError>(m, "FormatError", PyExc_ValueError);

  m.def("version", &cli::version);

  m.def("c_of", &c_of, py::arg("m"), "Lift |0><0| (x) M + |1><1| (x) conj(M).");
  m.def("sim_hamiltonian", &sim_hamiltonian, py::arg("h"));
  m.def("hamiltonian_identity_residual", &hamiltonian_identity_residual, py::arg("h"), py::arg("t"));
  m.def(
      "sim_state",
      [](const Vector& psi, double a, cplx c, std::vector<std::size_t> dims) {
        return sim_state(as_state(psi, std::move(dims)), {a, c}).matrix();
      },
      py::arg("psi"), py::arg("a"), py::arg("c") = cplx(0.0, 0.0), py::arg("dims") = std::vector<std::size_t>{});
  m.def(
      "real_simulation_state",
      [](const Vector& psi, std::vector<std::size_t> dims) {
        return real_simulation_state(sim_state(as_state(psi, std::move(dims)), {0.5, 0.5})).amplitudes();
      },
      py::arg("psi"), py::arg("dims") = std::vector<std::size_t>{});
  m.def(
      "real_simulation_operator", [](const Matrix& op) { return real_simulation_operator(c_of(op)); },
      py::arg("m"), "Real-simulation image of C(M).");

  m.def(
      "c_property_suite",
      [](std::size_t dim, std::size_t trials, std::uint64_t seed, double tol) {
        CPropertyConfig cfg;
        cfg.dim = dim;
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.tol = tol;
        return report(c_property_suite(cfg));
      },
      py::arg("dim") = 4, py::arg("trials") = 100, py::arg("seed") = 1, py::arg("tol") = kDefaultTol);

  m.def(
      "correlations",
      [](const std::string& kind, double a, cplx c, bool cross) {
        const auto k = kind_from_string(kind);
        return report(correlations(family_experiment(k, {a, c}), k, cross));
      },
      py::arg("kind") = "mayersyao", py::arg("a") = 1.0, py::arg("c") = cplx(0.0, 0.0), py::arg("cross") = false);

  m.def(
      "selftest_family",
      [](const std::string& kind, double a, cplx c, double tol) {
        SelfTestOptions opt;
        opt.kind = kind_from_string(kind);
        opt.tol = tol;
        return report(run_selftest(family_experiment(opt.kind, {a, c}), opt));
      },
      py::arg("kind") = "mayersyao", py::arg("a") = 1.0, py::arg("c") = cplx(0.0, 0.0), py::arg("tol") = 1e-9);
  m.def(
      "selftest_experiment",
      [](const std::string& experiment_json, const std::string& kind, double tol) {
        SelfTestOptions opt;
        opt.kind = kind_from_string(kind);
        opt.tol = tol;
        const auto exp = io::experiment_from_json(io::json::parse(experiment_json));
        return report(run_selftest(exp, opt));
      },
      py::arg("experiment"), py::arg("kind") = "mayersyao", py::arg("tol") = 1e-9);

  m.def(
      "qkd",
      [](const std::string& strategy_json, std::size_t n, std::uint64_t seed, unsigned workers) {
        const auto s = io::strategy_from_json(io::json::parse(strategy_json));
        validate(s);
        const auto t = run_rounds(s, n, seed, workers);
        io::json j;
        j["analysis"] = io::to_json(analyze(t));
        j["eve_corrected"] = io::to_json(eve_flip_correction(t));
        return io::dump(j);
      },
      py::arg("strategy"), py::arg("n"), py::arg("seed"), py::arg("workers") = 1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a CLI command in-process; returns (exit_code, stdout, stderr).");
}
