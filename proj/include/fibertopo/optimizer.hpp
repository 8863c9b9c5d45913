// Outer optimization loop: analysis, clustering, sensitivities, filtering and
// one MMA step per iteration, stopped when the largest density change drops
// below the tolerance.
#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "fibertopo/fem.hpp"
#include "fibertopo/mma.hpp"
#include "fibertopo/stress.hpp"

namespace fibertopo {

struct StressConstraintSettings {
  int n_clusters = 1;
  int points_per_cluster = 0;
  double sigma1_tension = 0.0;
  double sigma1_compression = 0.0;
  double sigma2_tension = 0.0;
  double sigma2_compression = 0.0;
  int exclusion_radius = 1;

  /// min(compression, tension) per direction.
  std::array<double, 2> limits() const;
};

struct OptimizationSettings {
  double volume_fraction = 0.25;
  int pnorm = 8;
  double filter_radius = 1.5;
  double rho_init = 1.0;
  double theta_init = -0.1;
  double tolerance = 1e-3;
  int max_iter = 8000;
  double move_rho = 0.2;
  double move_theta = 0.2;
  MmaSettings mma;
  std::optional<StressConstraintSettings> stress;
};

inline constexpr int kMaxStressConstraints = 4;

struct IterationRecord {
  int iter = 0;
  double compliance = 0.0;
  /// Normalized stress constraints in cluster-major order
  /// (s1 c1, s2 c1, s1 c2, s2 c2); NaN when absent.
  std::array<double, kMaxStressConstraints> g{};
  double volume = 0.0;
  double max_sigma1 = 0.0;  ///< max |sigma_1| outside the load zone
  double max_sigma2 = 0.0;
  double max_change = 0.0;  ///< max |delta rho| of the step taken
};

enum class TerminationStatus { Converged, MaxIterations };

struct StressReport {
  double max_sigma1 = 0.0;
  double max_sigma2 = 0.0;
  int argmax_sigma1 = -1;
  int argmax_sigma2 = -1;
};

struct OptimizationResult {
  DesignState design;
  StressField stress;
  double compliance = 0.0;
  double volume = 0.0;
  std::vector<IterationRecord> history;
  int iterations = 0;
  TerminationStatus status = TerminationStatus::MaxIterations;
  /// P-norm values (Pa) of the final design's clusters, cluster-major.
  std::vector<double> final_pnorm;
  std::vector<int> load_zone;
  std::vector<int> support_corners;
  /// Max |sigma_i| outside the load zone and support corners.
  StressReport report;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

OptimizationResult run_optimization(const FeModel& model, const OptimizationSettings& settings,
                                    const IterationObserver& observer = {});

/// Max |sigma_i| over elements not listed in `skip` (sorted).
StressReport max_stresses(const StressField& stress, const std::vector<int>& skip);

double volume_fraction(const Eigen::VectorXd& rho);

}  // namespace fibertopo
