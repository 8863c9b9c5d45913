#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fibertopo/export.hpp"
#include "fibertopo/gradcheck.hpp"
#include "fibertopo/problem.hpp"

namespace py = pybind11;
using namespace fibertopo;

namespace {

py::dict result_dict(const OptimizationResult& r, const StructuredMesh& mesh) {
  py::dict d;
  d["converged"] = r.status == TerminationStatus::Converged;
  d["iterations"] = r.iterations;
  d["compliance"] = r.compliance;
  d["volume"] = r.volume;
  d["max_sigma1"] = r.report.max_sigma1;
  d["max_sigma2"] = r.report.max_sigma2;
  d["pnorm"] = r.final_pnorm;
  d["density"] = element_grid(mesh, r.design.rho);
  d["theta"] = element_grid(mesh, r.design.theta);
  d["sigma1"] = element_grid(mesh, r.stress.sigma1);
  d["sigma2"] = element_grid(mesh, r.stress.sigma2);
  py::list history;
  for (const auto& h : r.history) {
    py::dict row;
    row["iter"] = h.iter;
    row["compliance"] = h.compliance;
    row["g"] = std::vector<double>(h.g.begin(), h.g.end());
    row["volume"] = h.volume;
    row["max_sigma1"] = h.max_sigma1;
    row["max_sigma2"] = h.max_sigma2;
    row["max_change"] = h.max_change;
    history.append(row);
  }
  d["history"] = history;
  return d;
}

py::dict run_json(const std::string& config_json, int max_iter, const std::string& output_dir) {
  ProblemConfig cfg = parse_config(config_json);
  if (max_iter > 0) cfg.max_iter = max_iter;
  const FeModel model = build_model(cfg);
  OptimizationResult r;
  {
    py::gil_scoped_release release;
    r = run_optimization(model, optimization_settings(cfg));
  }
  if (!output_dir.empty()) export_fields(r, model.mesh(), output_dir, cfg.name);
  return result_dict(r, model.mesh());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Density and fibre-angle topology optimization with P-norm stress constraints";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ConstitutiveError>(m, "ConstitutiveError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<OrthotropicMaterial>(m, "OrthotropicMaterial")
      .def(py::init([](double e1, double e2, double g12, double nu12, double nu21) {
             OrthotropicMaterial mat{e1, e2, g12, nu12, nu21};
             mat.validate();
             return mat;
           }),
           py::arg("e1"), py::arg("e2"), py::arg("g12"), py::arg("nu12"), py::arg("nu21"))
      .def_static("epoxy_glass", &OrthotropicMaterial::epoxy_glass)
      .def_static("isotropic", &OrthotropicMaterial::isotropic, py::arg("modulus"),
                  py::arg("poisson"))
      .def_readonly("e1", &OrthotropicMaterial::e1)
      .def_readonly("e2", &OrthotropicMaterial::e2)
      .def_readonly("g12", &OrthotropicMaterial::g12)
      .def_readonly("nu12", &OrthotropicMaterial::nu12)
      .def_readonly("nu21", &OrthotropicMaterial::nu21)
      .def("__repr__", [](const OrthotropicMaterial& mat) {
        return "OrthotropicMaterial(e1=" + std::to_string(mat.e1) + ", e2=" +
               std::to_string(mat.e2) + ", g12=" + std::to_string(mat.g12) + ", nu12=" +
               std::to_string(mat.nu12) + ", nu21=" + std::to_string(mat.nu21) + ")";
      });

  m.def("constitutive_matrix", &constitutive_matrix, py::arg("material"));
  m.def("transformed_constitutive",
        py::overload_cast<const OrthotropicMaterial&, double>(&transformed_constitutive),
        py::arg("material"), py::arg("theta"));
  m.def("element_stiffness", &element_stiffness, py::arg("material"), py::arg("theta"),
        py::arg("elem_size") = 1.0, py::arg("thickness") = 1.0);
  m.def("pnorm", [](const std::vector<double>& v, int p) { return pnorm(v, p); }, py::arg("values"),
        py::arg("p"));

  m.def("case_config", [](int id, const std::string& variant) {
        return serialize_config(build_case_study(id, variant));
      },
      py::arg("case_id"), py::arg("variant") = "",
      "JSON text of a built-in case study.");
  m.def("normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
        py::arg("config_json"), "Parse, validate and re-serialize a config with all defaults filled in.");
  m.def("run", &run_json, py::arg("config_json"), py::arg("max_iter") = 0,
        py::arg("output_dir") = "",
        "Optimize the problem described by a JSON config. Returns a dict with the final "
        "fields as (nely, nelx) arrays and the iteration history.");

  m.def("gradcheck",
        [](int nelx, int nely, std::uint64_t seed, double h) {
          GradcheckOptions o;
          o.nelx = nelx;
          o.nely = nely;
          o.seed = seed;
          o.h = h;
          const GradReport r = run_gradcheck(o);
          py::dict d;
          d["passed"] = r.passed;
          d["tolerance"] = r.tolerance;
          py::list rows;
          for (const auto& e : r.entries) {
            py::dict row;
            row["function"] = to_string(e.function);
            row["variable"] = to_string(e.variable);
            row["max_rel_error"] = e.max_rel_error;
            row["argmax"] = e.argmax;
            rows.append(row);
          }
          d["entries"] = rows;
          return d;
        },
        py::arg("nelx") = 4, py::arg("nely") = 3, py::arg("seed") = 0, py::arg("h") = 1e-6);
}
