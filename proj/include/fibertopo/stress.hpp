// Maximum-stress-level clustering and P-norm stress constraints.
//
// For each principal direction the stress evaluation points (element
// centroids) are ranked by descending |sigma_i|. The leading clusters of
// n_s points each are aggregated by a P-norm and constrained against
// min(sigma_C, sigma_T) of that direction.
#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fibertopo/errors.hpp"
#include "fibertopo/fem.hpp"

namespace fibertopo {

/// sqrt(sigma^2 + eps^2).
double smooth_abs(double sigma, double eps);
/// sigma / sqrt(sigma^2 + eps^2); zero at sigma == 0.
double smooth_abs_derivative(double sigma, double eps);

/// Relative smoothing of |sigma|: eps = kSmoothAbsRelative * limit.
inline constexpr double kSmoothAbsRelative = 1e-6;

/// Smallest admissible cluster size: ceil(0.025 * n_active).
int min_points_per_cluster(int n_active);

struct ClusterSet {
  /// clusters[i][k] lists the element indices of the k-th cluster in
  /// direction i, in ranking order.
  std::array<std::vector<std::vector<int>>, 2> clusters;
  int points_per_cluster = 0;
  std::vector<int> excluded;   ///< sorted
};

/// Ranks points by descending |sigma_i| (ties by ascending element index),
/// skipping `excluded`, and keeps the first `n_clusters` clusters of `n_s`
/// points per direction. The final kept cluster may be short when points run
/// out. Throws ConfigError when n_s < ceil(0.025 * N) or n_clusters < 1.
ClusterSet build_clusters(const StressField& stress, int n_clusters, int n_s,
                          std::vector<int> excluded);

/// ((1/N) sum |v|^P)^(1/P), evaluated with max-scaling so large P does not
/// overflow. Requires an even P >= 2.
double pnorm(std::span<const double> values, int p);

struct StressConstraint {
  int direction = 0;   ///< 0 for sigma_1, 1 for sigma_2
  int cluster = 0;
  double value = 0.0;  ///< P-norm (Pa)
  double limit = 0.0;  ///< min(sigma_C, sigma_T) (Pa)
  double normalized = 0.0;  ///< value / limit - 1
  Eigen::VectorXd dvalue_drho;
  Eigen::VectorXd dvalue_dtheta;
};

/// Constraints ordered cluster-major: (s1,c1), (s2,c1), (s1,c2), (s2,c2).
struct ConstraintBlock {
  std::vector<StressConstraint> constraints;
};

/// P-norm values of every cluster in `clusters` plus their adjoint
/// sensitivities. Membership is taken as given (frozen). One adjoint solve is
/// performed per constraint with the factorization held by `solved`.
ConstraintBlock constraint_values_and_sensitivities(const FeModel& model,
                                                    const DesignState& design,
                                                    const SolvedState& solved,
                                                    const ClusterSet& clusters, int p,
                                                    std::array<double, 2> limits);

/// P-norm values only, for the same frozen clusters.
std::vector<double> constraint_values(const FeModel& model, const DesignState& design,
                                      const SolvedState& solved, const ClusterSet& clusters,
                                      int p, std::array<double, 2> limits);

/// Elements touching a loaded node, grown by `radius` layers of edge
/// neighbours. A negative radius disables the exclusion.
std::vector<int> load_zone_elements(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                    int radius);

/// Elements touching an end point of a line of fixed nodes (the corners of
/// the supports, where stress concentrations are reported separately).
std::vector<int> support_corner_elements(const StructuredMesh& mesh,
                                         const BoundaryConditions& bc);

}  // namespace fibertopo
