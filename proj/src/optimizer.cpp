#include "fibertopo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fibertopo/compliance.hpp"
#include "fibertopo/errors.hpp"
#include "fibertopo/filter.hpp"

namespace fibertopo {

std::array<double, 2> StressConstraintSettings::limits() const {
  return {std::min(sigma1_compression, sigma1_tension),
          std::min(sigma2_compression, sigma2_tension)};
}

StressReport max_stresses(const StressField& stress, const std::vector<int>& skip) {
  StressReport r;
  for (int e = 0; e < stress.sigma1.size(); ++e) {
    if (std::binary_search(skip.begin(), skip.end(), e)) continue;
    if (std::abs(stress.sigma1[e]) > r.max_sigma1) {
      r.max_sigma1 = std::abs(stress.sigma1[e]);
      r.argmax_sigma1 = e;
    }
    if (std::abs(stress.sigma2[e]) > r.max_sigma2) {
      r.max_sigma2 = std::abs(stress.sigma2[e]);
      r.argmax_sigma2 = e;
    }
  }
  return r;
}

double volume_fraction(const Eigen::VectorXd& rho) {
  return rho.size() == 0 ? 0.0 : rho.mean();
}

namespace {

void check_settings(const OptimizationSettings& s, int n) {
  if (!(s.volume_fraction > 0.0 && s.volume_fraction <= 1.0)) {
    throw ConfigError("volume_fraction: must lie in (0, 1]");
  }
  if (s.pnorm < 2 || s.pnorm % 2 != 0) throw ConfigError("pnorm: must be an even integer >= 2");
  if (!(s.tolerance > 0.0)) throw ConfigError("tolerance: must be positive");
  if (s.max_iter < 1) throw ConfigError("max_iter: must be at least 1");
  if (!(s.move_rho > 0.0) || !(s.move_theta > 0.0)) {
    throw ConfigError("mma.move: move limits must be positive");
  }
  if (!(s.rho_init >= 0.0 && s.rho_init <= 1.0)) throw ConfigError("rho_init: outside [0, 1]");
  if (!(std::abs(s.theta_init) <= std::numbers::pi)) {
    throw ConfigError("theta_init: outside [-pi, pi]");
  }
  if (s.stress) {
    const auto lim = s.stress->limits();
    if (!(lim[0] > 0.0) || !(lim[1] > 0.0)) throw ConfigError("stress: limits must be positive");
    if (s.stress->n_clusters < 1) throw ConfigError("stress.n_clusters: must be at least 1");
    if (s.stress->points_per_cluster < min_points_per_cluster(n)) {
      throw ConfigError("stress.points_per_cluster: below 2.5% of the active element count (" +
                        std::to_string(min_points_per_cluster(n)) + ")");
    }
  }
}

}  // namespace

OptimizationResult run_optimization(const FeModel& model, const OptimizationSettings& settings,
                                    const IterationObserver& observer) {
  const int n = model.num_elements();
  check_settings(settings, n);
  const StructuredMesh& mesh = model.mesh();
  const FilterKernel kernel = FilterKernel::build(mesh, settings.filter_radius);

  OptimizationResult result;
  const int radius = settings.stress ? settings.stress->exclusion_radius : 1;
  result.load_zone = load_zone_elements(mesh, model.bc(), radius);
  result.support_corners = support_corner_elements(mesh, model.bc());
  std::vector<int> report_skip = result.load_zone;
  report_skip.insert(report_skip.end(), result.support_corners.begin(),
                     result.support_corners.end());
  std::sort(report_skip.begin(), report_skip.end());
  report_skip.erase(std::unique(report_skip.begin(), report_skip.end()), report_skip.end());

  int num_stress = 0;
  std::array<double, 2> limits{1.0, 1.0};
  if (settings.stress) {
    limits = settings.stress->limits();
    const int available = n - static_cast<int>(result.load_zone.size());
    const int per = settings.stress->points_per_cluster;
    const int clusters = std::min(settings.stress->n_clusters, (available + per - 1) / per);
    num_stress = 2 * clusters;
    if (num_stress > kMaxStressConstraints) {
      throw ConfigError("stress.n_clusters: at most 2 clusters per direction are supported");
    }
    if (num_stress == 0) throw ConfigError("stress: no stress evaluation points available");
  }
  const int m = 1 + num_stress;

  Eigen::VectorXd xmin(2 * n), xmax(2 * n), move(2 * n);
  xmin << Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(n, -std::numbers::pi);
  xmax << Eigen::VectorXd::Ones(n), Eigen::VectorXd::Constant(n, std::numbers::pi);
  move << Eigen::VectorXd::Constant(n, settings.move_rho),
      Eigen::VectorXd::Constant(n, settings.move_theta);
  MmaSolver mma(xmin, xmax, move, m, settings.mma);

  DesignState design = DesignState::uniform(n, settings.rho_init, settings.theta_init);
  Eigen::VectorXd x(2 * n);
  double c0 = 0.0;
  result.status = TerminationStatus::MaxIterations;

  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    const SolvedState solved = model.solve(design);
    const ObjectiveResult obj = compliance_and_gradients(model, design, solved);
    if (iter == 1) c0 = obj.compliance > 0.0 ? obj.compliance : 1.0;
    const StressField stress = model.element_stresses(design, solved.u());

    IterationRecord rec;
    rec.iter = iter;
    rec.compliance = obj.compliance;
    rec.g.fill(std::numeric_limits<double>::quiet_NaN());
    rec.volume = volume_fraction(design.rho);
    const StressReport peaks = max_stresses(stress, result.load_zone);
    rec.max_sigma1 = peaks.max_sigma1;
    rec.max_sigma2 = peaks.max_sigma2;

    Eigen::VectorXd df0(2 * n);
    df0 << kernel.apply(design.rho, obj.dc_drho) / c0, obj.dc_dtheta / c0;

    Eigen::VectorXd g(m);
    Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(m, 2 * n);
    g[0] = rec.volume / settings.volume_fraction - 1.0;
    dg.row(0).head(n).setConstant(1.0 / (n * settings.volume_fraction));

    if (settings.stress) {
      const ClusterSet clusters =
          build_clusters(stress, settings.stress->n_clusters,
                         settings.stress->points_per_cluster, result.load_zone);
      const ConstraintBlock block = constraint_values_and_sensitivities(
          model, design, solved, clusters, settings.pnorm, limits);
      if (static_cast<int>(block.constraints.size()) != num_stress) {
        throw SolverError("stress constraint count changed during optimization");
      }
      for (int k = 0; k < num_stress; ++k) {
        const StressConstraint& sc = block.constraints[k];
        rec.g[k] = sc.normalized;
        g[1 + k] = sc.normalized;
        dg.row(1 + k).head(n) = kernel.apply(design.rho, sc.dvalue_drho).transpose() / sc.limit;
        dg.row(1 + k).tail(n) = sc.dvalue_dtheta.transpose() / sc.limit;
      }
    }

    x << design.rho, design.theta;
    const MmaSolver::Step step = mma.update(x, df0, g, dg);
    const Eigen::VectorXd rho_next = step.x.head(n);
    rec.max_change = (rho_next - design.rho).cwiseAbs().maxCoeff();
    design.rho = rho_next;
    design.theta = step.x.tail(n);

    result.history.push_back(rec);
    if (observer) observer(rec);
    if (rec.max_change < settings.tolerance) {
      result.status = TerminationStatus::Converged;
      break;
    }
  }
  result.iterations = static_cast<int>(result.history.size());

  const SolvedState solved = model.solve(design);
  result.compliance = solved.u().dot(solved.force());
  result.stress = model.element_stresses(design, solved.u());
  result.volume = volume_fraction(design.rho);
  result.report = max_stresses(result.stress, report_skip);
  if (settings.stress) {
    const ClusterSet clusters =
        build_clusters(result.stress, settings.stress->n_clusters,
                       settings.stress->points_per_cluster, result.load_zone);
    result.final_pnorm =
        constraint_values(model, design, solved, clusters, settings.pnorm, limits);
  }
  result.design = std::move(design);
  return result;
}

}  // namespace fibertopo
