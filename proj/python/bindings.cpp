#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "nsalpha/convection.hpp"
#include "nsalpha/errors.hpp"
#include "nsalpha/experiments.hpp"
#include "nsalpha/io.hpp"

namespace py = pybind11;
using namespace nsalpha;

namespace {

// Python handle on an immutable shared basis.
struct Basis {
  BasisPtr ptr;
};

Basis wrap(EigenBasis b) { return Basis{std::make_shared<const EigenBasis>(std::move(b))}; }

KeyValues to_key_values(const py::dict& config) {
  KeyValues kv;
  for (const auto& [k, v] : config) kv[py::str(k)] = py::str(v);
  return kv;
}

py::dict validation_dict(const ValidationReport& r) {
  py::dict d;
  d["passed"] = r.passed();
  d["orthonormality_defect"] = r.orthonormality_defect;
  d["divergence_residual"] = r.divergence_residual;
  d["boundary_residual"] = r.boundary_residual;
  d["failures"] = r.failures;
  return d;
}

py::dict fit_dict(const RateFit& f) {
  py::dict d;
  d["slope"] = f.slope;
  d["intercept"] = f.intercept;
  d["residual"] = f.residual;
  d["K_hat"] = f.K_hat;
  d["K_hat_ratio"] = f.K_hat_ratio;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral-Galerkin Navier-Stokes / NS-alpha solver";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Basis>(m, "Basis")
      .def_property_readonly("size", [](const Basis& b) { return b.ptr->size(); })
      .def_property_readonly("domain", [](const Basis& b) { return to_string(b.ptr->kind()); })
      .def_property_readonly("eigenvalues", [](const Basis& b) { return b.ptr->eigenvalues(); })
      .def_property_readonly("grid", [](const Basis& b) { return b.ptr->grid_resolution(); })
      .def("__len__", [](const Basis& b) { return b.ptr->size(); })
      .def("__repr__", [](const Basis& b) {
        std::ostringstream s;
        s << "<nsalpha.Basis " << to_string(b.ptr->kind()) << " modes=" << b.ptr->size() << ">";
        return s.str();
      });

  m.def("torus_basis", [](std::size_t modes, int grid) { return wrap(build_torus_basis(modes, grid)); },
        py::arg("modes"), py::arg("grid") = 0);
  m.def("square_basis", [](std::size_t modes, int mesh) { return wrap(build_square_basis(modes, mesh)); },
        py::arg("modes"), py::arg("mesh") = 64);
  m.def("read_basis", [](const std::string& path) { return wrap(read_basis(path)); }, py::arg("path"));
  m.def("write_basis", [](const std::string& path, const Basis& b) { write_basis(path, *b.ptr); }, py::arg("path"),
        py::arg("basis"));
  m.def("validate_basis", [](const Basis& b) { return validation_dict(validate_basis(*b.ptr)); }, py::arg("basis"));

  m.def(
      "convection",
      [](const Basis& b, const Eigen::VectorXd& u, const Eigen::VectorXd& v, const std::string& form) {
        ConvectionOperator op(b.ptr);
        if (form == "B") return op.convective(u, v);
        if (form == "B_tilde") return op.rotational(u, v);
        if (form == "B_star") return op.transposed(u, v);
        throw ConfigError("form must be B, B_tilde or B_star");
      },
      py::arg("basis"), py::arg("u"), py::arg("v"), py::arg("form") = "B_tilde",
      "Galerkin coefficients of B(u, v), B~(u, v) or B*(u, v).");

  m.def(
      "integrate",
      [](const Basis& b, const py::dict& config) {
        const SolverConfig cfg = cli::solver_config(to_key_values(config));
        Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = integrate(b.ptr, cfg);
        }
        py::dict out;
        std::vector<double> E0, E_alpha, D_alpha, balance;
        for (const auto& e : traj.energy) {
          E0.push_back(e.E0);
          E_alpha.push_back(e.E_alpha);
          D_alpha.push_back(e.D_alpha);
          balance.push_back(e.balance_residual);
        }
        Eigen::MatrixXd u(static_cast<Eigen::Index>(traj.u.size()), static_cast<Eigen::Index>(traj.n));
        for (std::size_t i = 0; i < traj.u.size(); ++i) u.row(static_cast<Eigen::Index>(i)) = traj.u[i].transpose();
        out["t"] = traj.times;
        out["E0"] = E0;
        out["E_alpha"] = E_alpha;
        out["D_alpha"] = D_alpha;
        out["balance_residual"] = balance;
        out["u"] = u;
        out["steps"] = traj.steps;
        out["max_balance_residual"] = traj.max_balance_residual;
        out["warnings"] = traj.warnings;
        return out;
      },
      py::arg("basis"), py::arg("config") = py::dict(),
      "Integrates with the CLI configuration keys (nu, alpha, n, dt, t_end, init, forcing, ...).");

  m.def("fit_rate", [](const std::vector<double>& x, const std::vector<double>& y) { return fit_dict(fit_rate(x, y)); },
        py::arg("x"), py::arg("y"));
  m.def("config_hash", [](const py::dict& config) { return config_hash(to_key_values(config)); }, py::arg("config"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line interface in-process; returns (exit code, stdout, stderr).");

  m.attr("__version__") = library_version();
}
