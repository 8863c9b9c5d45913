#include "fibertopo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "fibertopo/compliance.hpp"

namespace fibertopo {

std::string to_string(GradFunction f) {
  switch (f) {
    case GradFunction::Compliance: return "compliance";
    case GradFunction::Sigma1Pnorm: return "sigma1_pn";
    case GradFunction::Sigma2Pnorm: return "sigma2_pn";
  }
  return "?";
}

std::string to_string(GradVariable v) { return v == GradVariable::Density ? "rho" : "theta"; }

double central_difference(const std::function<double(double)>& f, double x, double h,
                          double lo, double hi) {
  if (x - h < lo) return (f(x + h) - f(x)) / h;
  if (x + h > hi) return (f(x) - f(x - h)) / h;
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

GradProblem cantilever_grad_problem(int nelx, int nely, const OrthotropicMaterial& mat,
                                    const DesignState& design, int pnorm) {
  StructuredMesh mesh = StructuredMesh::rectangle(nelx, nely, 1.0, 1.0);
  BoundaryConditions bc;
  for (int r = 0; r <= nely; ++r) {
    const int node = mesh.node_at(r, 0);
    bc.fixed_dofs.push_back(2 * node);
    bc.fixed_dofs.push_back(2 * node + 1);
  }
  std::sort(bc.fixed_dofs.begin(), bc.fixed_dofs.end());
  bc.loads.emplace_back(2 * mesh.node_at(nely, nelx) + 1, -1.0);

  FeModel model(std::move(mesh), std::move(bc), mat);
  const int n = model.num_elements();
  const int n_s = std::max(min_points_per_cluster(n), n / 4);
  const SolvedState solved = model.solve(design);
  ClusterSet clusters = build_clusters(model.element_stresses(design, solved.u()), 1, n_s, {});
  return GradProblem{std::move(model), std::move(clusters), pnorm, {1.0, 1.0}};
}

double evaluate(const GradProblem& problem, const DesignState& design, GradFunction f) {
  const SolvedState solved = problem.model.solve(design);
  if (f == GradFunction::Compliance) return solved.u().dot(solved.force());
  const auto values = constraint_values(problem.model, design, solved, problem.clusters,
                                        problem.pnorm, problem.limits);
  return values[f == GradFunction::Sigma1Pnorm ? 0 : 1];
}

Eigen::VectorXd analytic_gradient(const GradProblem& problem, const DesignState& design,
                                  GradFunction f, GradVariable v) {
  const SolvedState solved = problem.model.solve(design);
  const bool rho = v == GradVariable::Density;
  if (f == GradFunction::Compliance) {
    ObjectiveResult obj = compliance_and_gradients(problem.model, design, solved);
    return rho ? obj.dc_drho : obj.dc_dtheta;
  }
  const ConstraintBlock block = constraint_values_and_sensitivities(
      problem.model, design, solved, problem.clusters, problem.pnorm, problem.limits);
  const StressConstraint& sc = block.constraints[f == GradFunction::Sigma1Pnorm ? 0 : 1];
  return rho ? sc.dvalue_drho : sc.dvalue_dtheta;
}

double fd_gradient(const GradProblem& problem, const DesignState& design, GradFunction f,
                   GradVariable v, int index, double h) {
  const bool rho = v == GradVariable::Density;
  DesignState probe = design;
  Eigen::VectorXd& field = rho ? probe.rho : probe.theta;
  const double x0 = field[index];
  auto fn = [&](double x) {
    field[index] = x;
    return evaluate(problem, probe, f);
  };
  const double lo = rho ? 0.0 : -std::numbers::pi;
  const double hi = rho ? 1.0 : std::numbers::pi;
  const double d = central_difference(fn, x0, h, lo, hi);
  field[index] = x0;
  return d;
}

GradComparison compare_gradient(const Eigen::VectorXd& analytic, const std::vector<int>& indices,
                                const std::vector<double>& fd) {
  GradComparison out;
  const double floor = 1e-12 * analytic.cwiseAbs().maxCoeff();
  for (size_t k = 0; k < indices.size(); ++k) {
    const double a = analytic[indices[k]];
    const double denom = std::max({std::abs(a), floor, std::numeric_limits<double>::min()});
    const double err = std::abs(a - fd[k]) / denom;
    if (err > out.max_rel_error || out.argmax < 0) {
      out.max_rel_error = err;
      out.argmax = indices[k];
    }
  }
  return out;
}

std::string GradReport::table() const {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %-6s %14s %8s %10s\n", "function", "var", "max_rel_err",
                "argmax", "h");
  os << line;
  for (const auto& e : entries) {
    std::snprintf(line, sizeof line, "%-12s %-6s %14.3e %8d %10.1e\n",
                  to_string(e.function).c_str(), to_string(e.variable).c_str(), e.max_rel_error,
                  e.argmax, e.step);
    os << line;
  }
  os << (passed ? "PASS" : "FAIL") << " (tolerance " << tolerance << ")\n";
  return os.str();
}

DesignState random_design(int n, std::uint64_t seed, double rho_min, double rho_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rho(rho_min, rho_max);
  std::uniform_real_distribution<double> theta(-std::numbers::pi, std::numbers::pi);
  DesignState d;
  d.rho.resize(n);
  d.theta.resize(n);
  for (int e = 0; e < n; ++e) d.rho[e] = rho(rng);
  for (int e = 0; e < n; ++e) d.theta[e] = theta(rng);
  return d;
}

GradReport run_gradcheck(const GradcheckOptions& opt) {
  if (opt.nelx < 1 || opt.nely < 1 || opt.nelx > 10 || opt.nely > 10) {
    throw ConfigError("mesh: gradcheck supports meshes up to 10x10");
  }
  if (!(opt.h > 0.0)) throw ConfigError("h: must be positive");
  const int n = opt.nelx * opt.nely;
  const DesignState design = random_design(n, opt.seed, opt.rho_min, opt.rho_max);
  const GradProblem problem = cantilever_grad_problem(
      opt.nelx, opt.nely, OrthotropicMaterial::epoxy_glass(), design, opt.pnorm);

  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  GradReport report;
  report.tolerance = opt.tolerance;
  report.passed = true;
  for (GradFunction f :
       {GradFunction::Compliance, GradFunction::Sigma1Pnorm, GradFunction::Sigma2Pnorm}) {
    for (GradVariable v : {GradVariable::Density, GradVariable::Angle}) {
      std::vector<int> all(n);
      std::iota(all.begin(), all.end(), 0);
      std::vector<int> picked;
      if (opt.samples >= n) {
        picked = all;
      } else {
        std::sample(all.begin(), all.end(), std::back_inserter(picked), opt.samples, rng);
      }
      Eigen::VectorXd analytic = analytic_gradient(problem, design, f, v);
      if (opt.tamper) opt.tamper(f, v, analytic);
      std::vector<double> fd;
      for (int i : picked) fd.push_back(fd_gradient(problem, design, f, v, i, opt.h));
      const GradComparison cmp = compare_gradient(analytic, picked, fd);
      report.entries.push_back({f, v, cmp.max_rel_error, cmp.argmax, opt.h});
      if (!(cmp.max_rel_error < opt.tolerance)) report.passed = false;
    }
  }
  return report;
}

}  // namespace fibertopo
