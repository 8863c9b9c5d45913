#include "fibertopo/stress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace fibertopo {

double smooth_abs(double sigma, double eps) {
  return std::sqrt(sigma * sigma + eps * eps);
}

double smooth_abs_derivative(double sigma, double eps) {
  if (sigma == 0.0) return 0.0;
  return sigma / std::sqrt(sigma * sigma + eps * eps);
}

int min_points_per_cluster(int n_active) {
  // Integer form of ceil(0.025 * n) = ceil(n / 40).
  return (n_active + 39) / 40;
}

ClusterSet build_clusters(const StressField& stress, int n_clusters, int n_s,
                          std::vector<int> excluded) {
  const int n = static_cast<int>(stress.sigma1.size());
  if (n_clusters < 1) {
    throw ConfigError("stress.n_clusters: must be at least 1");
  }
  if (n_s < min_points_per_cluster(n)) {
    throw ConfigError("stress.points_per_cluster: " + std::to_string(n_s) +
                      " is below 2.5% of the " + std::to_string(n) + " active elements");
  }
  std::sort(excluded.begin(), excluded.end());
  excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());

  std::vector<int> candidates;
  candidates.reserve(n);
  for (int e = 0; e < n; ++e) {
    if (!std::binary_search(excluded.begin(), excluded.end(), e)) candidates.push_back(e);
  }

  ClusterSet out;
  out.points_per_cluster = n_s;
  for (int dir = 0; dir < 2; ++dir) {
    const Eigen::VectorXd& s = stress.direction(dir);
    std::vector<int> order = candidates;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(s[a]) > std::abs(s[b]);
    });
    for (int k = 0; k < n_clusters; ++k) {
      const size_t begin = static_cast<size_t>(k) * n_s;
      if (begin >= order.size()) break;
      const size_t end = std::min(order.size(), begin + n_s);
      out.clusters[dir].emplace_back(order.begin() + begin, order.begin() + end);
    }
  }
  out.excluded = std::move(excluded);
  return out;
}

double pnorm(std::span<const double> values, int p) {
  if (p < 2 || p % 2 != 0) {
    throw ConfigError("pnorm: P must be an even integer >= 2");
  }
  if (values.empty()) return 0.0;
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += std::pow(std::abs(v) / peak, p);
  return peak * std::pow(sum / static_cast<double>(values.size()), 1.0 / p);
}

namespace {

struct ClusterEval {
  double value = 0.0;
  std::vector<double> weight;  // dPN/dsigma_a, in cluster order
};

ClusterEval evaluate_cluster(const std::vector<int>& members, const Eigen::VectorXd& sigma,
                             int p, double eps) {
  ClusterEval out;
  std::vector<double> bar(members.size());
  for (size_t k = 0; k < members.size(); ++k) bar[k] = smooth_abs(sigma[members[k]], eps);
  out.value = pnorm(bar, p);
  out.weight.resize(members.size());
  const double ns = static_cast<double>(members.size());
  for (size_t k = 0; k < members.size(); ++k) {
    const double dpn_dbar = out.value > 0.0 ? std::pow(bar[k] / out.value, p - 1) / ns : 0.0;
    out.weight[k] = dpn_dbar * smooth_abs_derivative(sigma[members[k]], eps);
  }
  return out;
}

}  // namespace

std::vector<double> constraint_values(const FeModel& model, const DesignState& design,
                                      const SolvedState& solved, const ClusterSet& clusters,
                                      int p, std::array<double, 2> limits) {
  const StressField stress = model.element_stresses(design, solved.u());
  std::vector<double> out;
  const size_t nk = std::max(clusters.clusters[0].size(), clusters.clusters[1].size());
  for (size_t k = 0; k < nk; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      if (k >= clusters.clusters[dir].size()) continue;
      out.push_back(evaluate_cluster(clusters.clusters[dir][k], stress.direction(dir), p,
                                     kSmoothAbsRelative * limits[dir])
                        .value);
    }
  }
  return out;
}

ConstraintBlock constraint_values_and_sensitivities(const FeModel& model,
                                                    const DesignState& design,
                                                    const SolvedState& solved,
                                                    const ClusterSet& clusters, int p,
                                                    std::array<double, 2> limits) {
  const int n = model.num_elements();
  const Matrix3& cmat = model.constitutive();
  const StrainDisplacement& b0 = model.basis().b_center;
  const double pen = model.penalty();
  const double floor = model.density_floor();
  const StressField stress = model.element_stresses(design, solved.u());

  ConstraintBlock block;
  std::vector<Eigen::VectorXd> lambdas;
  // Explicit (fixed-displacement) parts, accumulated per constraint.
  std::vector<Eigen::VectorXd> explicit_rho;
  std::vector<Eigen::VectorXd> explicit_theta;

  const size_t nk = std::max(clusters.clusters[0].size(), clusters.clusters[1].size());
  for (size_t k = 0; k < nk; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      if (k >= clusters.clusters[dir].size()) continue;
      const auto& members = clusters.clusters[dir][k];
      const double eps = kSmoothAbsRelative * limits[dir];
      const ClusterEval eval = evaluate_cluster(members, stress.direction(dir), p, eps);

      StressConstraint sc;
      sc.direction = dir;
      sc.cluster = static_cast<int>(k);
      sc.value = eval.value;
      sc.limit = limits[dir];
      sc.normalized = eval.value / limits[dir] - 1.0;

      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(model.mesh().num_dofs());
      Eigen::VectorXd ex_rho = Eigen::VectorXd::Zero(n);
      Eigen::VectorXd ex_theta = Eigen::VectorXd::Zero(n);
      for (size_t m = 0; m < members.size(); ++m) {
        const int a = members[m];
        const double w = eval.weight[m];
        if (w == 0.0) continue;
        const double rho = design.rho[a];
        const double theta = design.theta[a];
        const Eigen::RowVector3d erow = cmat.row(dir);
        const Eigen::Matrix<double, 1, 8> r = erow * transform_matrices(theta).t2 * b0;
        const Eigen::Matrix<double, 1, 8> dr = erow * transform_derivatives(theta).dt2 * b0;
        const Vector8 ua = model.element_displacement(solved.u(), a);
        const double eta = stress_interpolation(rho);
        const double deta = 0.5 / std::sqrt(std::max(rho, floor));
        ex_rho[a] += w * deta * r.dot(ua);
        ex_theta[a] += w * eta * dr.dot(ua);
        model.scatter_add(a, w * eta * r.transpose(), rhs);
      }
      lambdas.push_back(solved.adjoint_solve(rhs));
      explicit_rho.push_back(std::move(ex_rho));
      explicit_theta.push_back(std::move(ex_theta));
      block.constraints.push_back(std::move(sc));
    }
  }

  for (size_t c = 0; c < block.constraints.size(); ++c) {
    block.constraints[c].dvalue_drho = explicit_rho[c];
    block.constraints[c].dvalue_dtheta = explicit_theta[c];
  }
  if (block.constraints.empty()) return block;

  // Implicit part: -lambda^T (dK/dx_e) U, evaluated element by element.
  for (int e = 0; e < n; ++e) {
    const Vector8 ue = model.element_displacement(solved.u(), e);
    const Vector8 ku = model.basis().stiffness(transformed_constitutive(cmat, design.theta[e])) * ue;
    const Vector8 dku =
        model.basis().stiffness(transformed_constitutive_derivative(cmat, design.theta[e])) * ue;
    const double deta_k = stiffness_interpolation_derivative(design.rho[e], pen, floor);
    const double eta_k = stiffness_interpolation(design.rho[e], pen, floor);
    for (size_t c = 0; c < block.constraints.size(); ++c) {
      const Vector8 le = model.element_displacement(lambdas[c], e);
      block.constraints[c].dvalue_drho[e] -= deta_k * le.dot(ku);
      block.constraints[c].dvalue_dtheta[e] -= eta_k * le.dot(dku);
    }
  }
  return block;
}

std::vector<int> load_zone_elements(const StructuredMesh& mesh, const BoundaryConditions& bc,
                                    int radius) {
  if (radius < 0) return {};
  const std::vector<int> loaded = bc.loaded_nodes();
  std::set<int> zone;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int node : mesh.element_nodes(e)) {
      if (std::binary_search(loaded.begin(), loaded.end(), node)) {
        zone.insert(e);
        break;
      }
    }
  }
  for (int layer = 0; layer < radius; ++layer) {
    std::set<int> grown = zone;
    for (int e : zone) {
      for (int nb : mesh.edge_neighbors(e)) grown.insert(nb);
    }
    zone = std::move(grown);
  }
  return {zone.begin(), zone.end()};
}

std::vector<int> support_corner_elements(const StructuredMesh& mesh,
                                         const BoundaryConditions& bc) {
  std::set<int> fixed_nodes;
  for (int d : bc.fixed_dofs) fixed_nodes.insert(d / 2);
  std::set<int> ends;
  for (int node : fixed_nodes) {
    const NodeCoord c = mesh.node_coord(node);
    int fixed_neighbors = 0;
    for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
      const int nb = mesh.node_at(c.row + dr, c.col + dc);
      if (nb >= 0 && fixed_nodes.count(nb)) ++fixed_neighbors;
    }
    if (fixed_neighbors <= 1) ends.insert(node);
  }
  std::vector<int> out;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int node : mesh.element_nodes(e)) {
      if (ends.count(node)) {
        out.push_back(e);
        break;
      }
    }
  }
  return out;
}

}  // namespace fibertopo
