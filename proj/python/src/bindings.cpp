#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "jinv/checks.hpp"
#include "jinv/errors.hpp"
#include "jinv/harness.hpp"

namespace py = pybind11;
using namespace jinv;

namespace {

// P1 space on an n x n mesh; the Python side only needs the dof layout.
struct P1Space {
  std::shared_ptr<const FunctionSpace> space;

  explicit P1Space(int n) {
    if (n < 1) throw ConfigError("mesh size must be positive");
    space = build_space(build_mesh(n), 1);
  }
  Eigen::MatrixX2d coordinates() const {
    const auto& xs = space->dof_coordinates();
    Eigen::MatrixX2d c(static_cast<Eigen::Index>(xs.size()), 2);
    for (std::size_t i = 0; i < xs.size(); ++i) c.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
    return c;
  }
};

RegConfig reg_config(const std::string& kind, std::optional<double> gamma1, std::optional<double> gamma2,
                     std::optional<double> gamma, std::optional<double> eps_tv, std::optional<double> eps_joint,
                     std::optional<double> precond_shift) {
  RegConfig c;
  c.kind = parse_reg_kind(kind);
  c.gamma1 = gamma1;
  c.gamma2 = gamma2;
  c.gamma = gamma;
  c.eps_tv = eps_tv;
  c.eps_joint = eps_joint;
  c.precond_shift = precond_shift;
  return c;
}

}  // namespace

PYBIND11_MODULE(_jinv, m) {
  m.doc() = "Joint regularization and PDE-constrained inversion";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<P1Space>(m, "P1Space")
      .def(py::init<int>(), py::arg("n"))
      .def_property_readonly("num_dofs", [](const P1Space& s) { return s.space->num_dofs(); })
      .def("coordinates", &P1Space::coordinates)
      .def("misfit_percent",
           [](const P1Space& s, const Vec& rec, const Vec& truth) { return relative_medium_misfit(*s.space, rec, truth); },
           py::arg("reconstruction"), py::arg("truth"))
      .def("smooth", [](const P1Space& s, const Vec& v, int steps) { return smooth_field(*s.space, v, steps); },
           py::arg("values"), py::arg("steps"))
      .def("spectrum_pair",
           [](const P1Space& s, const std::string& variant, int steps) { return spectrum_pair(*s.space, variant, steps); },
           py::arg("variant") = "different", py::arg("smoothing_steps") = 0);

  py::class_<JointRegularizer>(m, "Regularizer")
      .def(py::init([](const P1Space& s, const std::string& kind, std::optional<double> gamma1,
                       std::optional<double> gamma2, std::optional<double> gamma, std::optional<double> eps_tv,
                       std::optional<double> eps_joint, std::optional<double> precond_shift) {
             return joint_reg_build(reg_config(kind, gamma1, gamma2, gamma, eps_tv, eps_joint, precond_shift),
                                    s.space);
           }),
           py::arg("space"), py::arg("kind"), py::kw_only(), py::arg("gamma1") = py::none(),
           py::arg("gamma2") = py::none(), py::arg("gamma") = py::none(), py::arg("eps_tv") = py::none(),
           py::arg("eps_joint") = py::none(), py::arg("precond_shift") = py::none())
      .def_property_readonly("dim", &JointRegularizer::dim)
      .def_property_readonly("has_hessian", &JointRegularizer::has_hessian)
      .def("value", &JointRegularizer::value, py::arg("x"))
      .def("gradient", [](const JointRegularizer& r, const Vec& x) { return r.value_grad(x).gradient; }, py::arg("x"))
      .def("hessian_apply", &JointRegularizer::hessian_apply, py::arg("x"), py::arg("direction"));

  m.def(
      "hessian_spectrum",
      [](const P1Space& s, const std::string& kind, const Vec& x, double eps) {
        const Spectrum sp = reg_hessian_spectrum(parse_reg_kind(kind), *s.space, x, eps);
        return py::make_tuple(sp.eigenvalues, sp.block_diagonal_eigenvalues, sp.negative_fraction);
      },
      py::arg("space"), py::arg("kind"), py::arg("x"), py::arg("eps"),
      "(eigenvalues, block-diagonal eigenvalues, negative fraction) of one regularization term");

  m.def(
      "run_experiment",
      [](const std::string& config, std::optional<std::string> out, std::optional<std::uint64_t> seed) {
        ExperimentConfig cfg = load_experiment(config);
        if (out) cfg.output_dir = *out;
        if (seed) cfg.seed = *seed;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        py::list rows;
        for (const auto& row : r.rows)
          rows.append(py::make_tuple(row.experiment, row.method, row.parameter, row.misfit_percent));
        return rows;
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
      "Runs an experiment config; returns (experiment, method, parameter, misfit %) rows");

  m.def(
      "check_config",
      [](const std::string& config) {
        const ExperimentConfig cfg = load_experiment(config);
        py::list methods;
        for (const auto& mth : cfg.methods) methods.append(mth.label);
        return methods;
      },
      py::arg("config"), "Validates a config file and returns the method labels it would run");

  m.def(
      "fd_checks",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : run_fd_checks(seed)) out.append(py::make_tuple(r.name, r.error, r.tolerance, r.passed()));
        return out;
      },
      py::arg("seed") = 1);
}
