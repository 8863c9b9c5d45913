// Sensitivity filter for density gradients.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fibertopo/mesh.hpp"

namespace fibertopo {

inline constexpr double kFilterGamma = 1e-3;

class FilterKernel {
public:
  struct Neighbor {
    int element;
    double weight;  ///< max(0, r_min - distance)
  };

  /// Neighbour lists by centre-to-centre distance, `r_min` in element widths.
  static FilterKernel build(const StructuredMesh& mesh, double r_min);

  double radius() const { return r_min_; }
  int size() const { return static_cast<int>(neighbors_.size()); }
  const std::vector<Neighbor>& neighbors(int e) const { return neighbors_[e]; }

  /// sum_j H_ej rho_j g_j / (max(gamma, rho_e) * sum_j H_ej)
  Eigen::VectorXd apply(const Eigen::VectorXd& rho, const Eigen::VectorXd& grad) const;

private:
  double r_min_ = 0.0;
  std::vector<std::vector<Neighbor>> neighbors_;
  std::vector<double> weight_sum_;
};

}  // namespace fibertopo
