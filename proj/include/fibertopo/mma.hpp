// Method of Moving Asymptotes.
//
// Each call to MmaSolver::update builds the separable convex approximation
//   min  f0~(x) + a0 z + sum_i (c_i y_i + d_i y_i^2 / 2)
//   s.t. fi~(x) - a_i z - y_i <= 0,  alpha <= x <= beta,  y, z >= 0
// around the current point and solves it with a primal-dual interior point
// method. The elastic variables y keep the subproblem feasible; a positive y
// at the solution means the linearized constraints could not all be met.
#pragma once

#include <Eigen/Dense>

namespace fibertopo {

struct MmaSettings {
  double asy_init = 0.5;
  double asy_incr = 1.2;
  double asy_decr = 0.7;
  /// Bounds on the asymptote distance, relative to the local box width.
  double asy_min = 1e-4;
  double asy_max = 10.0;
  double albefa = 0.1;
  double raa0 = 1e-5;
  double a0 = 1.0;
  double c = 1000.0;
  double d = 1.0;
  double epsimin = 1e-9;
};

class MmaSolver {
public:
  /// `move` is an absolute per-variable move limit.
  MmaSolver(Eigen::VectorXd xmin, Eigen::VectorXd xmax, Eigen::VectorXd move, int num_constraints,
            MmaSettings settings = {});

  struct Step {
    Eigen::VectorXd x;
    double kkt_residual = 0.0;  ///< max-norm residual of the subproblem optimality system
    bool relaxed = false;       ///< an elastic variable y_i stayed positive
    int newton_iterations = 0;
  };

  /// One outer MMA iteration. `g` holds constraint values in g <= 0 form and
  /// `dg` their gradients, one row per constraint.
  Step update(const Eigen::VectorXd& x, const Eigen::VectorXd& df0, const Eigen::VectorXd& g,
              const Eigen::MatrixXd& dg);

  const Eigen::VectorXd& lower_asymptote() const { return low_; }
  const Eigen::VectorXd& upper_asymptote() const { return upp_; }
  int iteration() const { return iter_; }
  int num_variables() const { return static_cast<int>(xmin_.size()); }
  int num_constraints() const { return m_; }

private:
  Eigen::VectorXd xmin_;
  Eigen::VectorXd xmax_;
  Eigen::VectorXd move_;
  int m_;
  MmaSettings settings_;
  int iter_ = 0;
  Eigen::VectorXd xold1_;
  Eigen::VectorXd xold2_;
  Eigen::VectorXd low_;
  Eigen::VectorXd upp_;
};

}  // namespace fibertopo
