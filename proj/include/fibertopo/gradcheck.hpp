// Finite-difference check of the analytic sensitivities.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fibertopo/fem.hpp"
#include "fibertopo/stress.hpp"

namespace fibertopo {

enum class GradFunction { Compliance, Sigma1Pnorm, Sigma2Pnorm };
enum class GradVariable { Density, Angle };

std::string to_string(GradFunction f);
std::string to_string(GradVariable v);

/// (f(x+h) - f(x-h)) / 2h, or the one-sided quotient when x lies within h of
/// `lo` or `hi`.
double central_difference(const std::function<double(double)>& f, double x, double h,
                          double lo, double hi);

/// A model plus the frozen stress clusters the P-norm functions are taken over.
struct GradProblem {
  FeModel model;
  ClusterSet clusters;
  int pnorm = 8;
  std::array<double, 2> limits{1.0, 1.0};
};

/// Unit-size cantilever: left edge clamped, unit downward load at the
/// bottom-right node, one cluster of max(ceil(N/40), N/4) points per direction
/// ranked at `design` with no exclusion zone.
GradProblem cantilever_grad_problem(int nelx, int nely, const OrthotropicMaterial& mat,
                                    const DesignState& design, int pnorm = 8);

double evaluate(const GradProblem& problem, const DesignState& design, GradFunction f);
Eigen::VectorXd analytic_gradient(const GradProblem& problem, const DesignState& design,
                                  GradFunction f, GradVariable v);
double fd_gradient(const GradProblem& problem, const DesignState& design, GradFunction f,
                   GradVariable v, int index, double h);

struct GradComparison {
  double max_rel_error = 0.0;
  int argmax = -1;
};

/// Relative error |a - fd| / max(|a|, 1e-12 * ||analytic||_inf) over `indices`.
GradComparison compare_gradient(const Eigen::VectorXd& analytic, const std::vector<int>& indices,
                                const std::vector<double>& fd);

struct GradEntry {
  GradFunction function;
  GradVariable variable;
  double max_rel_error = 0.0;
  int argmax = -1;
  double step = 0.0;
};

struct GradReport {
  std::vector<GradEntry> entries;
  double tolerance = 1e-3;
  bool passed = false;

  std::string table() const;
};

struct GradcheckOptions {
  int nelx = 4;
  int nely = 3;
  std::uint64_t seed = 0;
  double h = 1e-6;
  int samples = 20;
  double rho_min = 0.3;
  double rho_max = 0.9;
  int pnorm = 8;
  double tolerance = 1e-3;
  /// Applied to every analytic gradient before comparison.
  std::function<void(GradFunction, GradVariable, Eigen::VectorXd&)> tamper;
};

DesignState random_design(int n, std::uint64_t seed, double rho_min, double rho_max);

GradReport run_gradcheck(const GradcheckOptions& options);

}  // namespace fibertopo
