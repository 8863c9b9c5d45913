#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fibertopo/gradcheck.hpp"
#include "fibertopo/stress.hpp"

using namespace fibertopo;

namespace {

StressField field(std::vector<double> s1, std::vector<double> s2 = {}) {
  StressField f;
  f.sigma1 = Eigen::Map<Eigen::VectorXd>(s1.data(), s1.size());
  if (s2.empty()) s2.assign(s1.size(), 0.0);
  f.sigma2 = Eigen::Map<Eigen::VectorXd>(s2.data(), s2.size());
  f.tau12 = Eigen::VectorXd::Zero(s1.size());
  return f;
}

}  // namespace

TEST_CASE("smoothed absolute value") {
  CHECK(smooth_abs(0.0, 1e-3) <= 1e-3);
  CHECK(smooth_abs(-5e3, 5e-3) == doctest::Approx(5e3).epsilon(1e-12));
  CHECK(smooth_abs_derivative(3.0, 0.0) == 1.0);
  CHECK(smooth_abs_derivative(-3.0, 0.0) == -1.0);
  CHECK(smooth_abs_derivative(0.0, 1e-3) == 0.0);
}

TEST_CASE("minimum cluster size") {
  CHECK(min_points_per_cluster(2400) == 60);
  CHECK(min_points_per_cluster(1600) == 40);
  CHECK(min_points_per_cluster(1601) == 41);
  CHECK(min_points_per_cluster(12) == 1);
}

TEST_CASE("top-n selection") {
  const auto f = field({9, 7, 5, 3, 8, 6, 4, 2});
  const ClusterSet c = build_clusters(f, 1, 2, {});
  REQUIRE(c.clusters[0].size() == 1);
  CHECK(c.clusters[0][0] == std::vector<int>{0, 4});
}

TEST_CASE("ties rank the lower index first and sign is ignored") {
  const auto f = field({1, -4, 2, 4, 0});
  const ClusterSet c = build_clusters(f, 1, 3, {});
  CHECK(c.clusters[0][0] == std::vector<int>{1, 3, 2});
}

TEST_CASE("excluded points never enter a cluster") {
  const auto f = field({9, 7, 5, 3, 8, 6, 4, 2});
  const ClusterSet c = build_clusters(f, 2, 2, {4, 0});
  CHECK(c.clusters[0][0] == std::vector<int>{1, 5});
  CHECK(c.clusters[0][1] == std::vector<int>{2, 6});
  CHECK(c.excluded == std::vector<int>{0, 4});
}

TEST_CASE("two clusters split the leading ranks") {
  std::vector<double> s(1600);
  for (int i = 0; i < 1600; ++i) s[i] = std::sin(0.37 * i) * (1 + i % 17);
  const auto f = field(s, s);
  const ClusterSet c = build_clusters(f, 2, 40, {});
  std::vector<int> order(1600);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(s[a]) > std::abs(s[b]); });
  for (int d = 0; d < 2; ++d) {
    REQUIRE(c.clusters[d].size() == 2);
    CHECK(c.clusters[d][0] == std::vector<int>(order.begin(), order.begin() + 40));
    CHECK(c.clusters[d][1] == std::vector<int>(order.begin() + 40, order.begin() + 80));
  }
}

TEST_CASE("last cluster may be short when points run out") {
  const auto f = field({1, 2, 3, 4, 5});
  const ClusterSet c = build_clusters(f, 2, 3, {});
  CHECK(c.clusters[0][0].size() == 3);
  CHECK(c.clusters[0][1].size() == 2);
}

TEST_CASE("cluster size below 2.5 percent is rejected") {
  const auto f = field(std::vector<double>(400, 1.0));
  CHECK_THROWS_AS(build_clusters(f, 1, 9, {}), ConfigError);
  CHECK_NOTHROW(build_clusters(f, 1, 10, {}));
  CHECK_THROWS_AS(build_clusters(f, 0, 10, {}), ConfigError);
}

TEST_CASE("pnorm values") {
  const std::vector<double> equal(7, 2.5);
  CHECK(pnorm(equal, 8) == doctest::Approx(2.5));
  const std::vector<double> one{-4.2};
  CHECK(pnorm(one, 6) == doctest::Approx(4.2));
  const std::vector<double> pair{3.0, 4.0};
  CHECK(pnorm(pair, 2) == doctest::Approx(3.5355339059).epsilon(1e-10));
  CHECK_THROWS_AS(pnorm(pair, 3), ConfigError);
  CHECK_THROWS_AS(pnorm(pair, 0), ConfigError);
  // no overflow at large P
  const std::vector<double> big{1e300, 5e299};
  CHECK(std::isfinite(pnorm(big, 200)));
}

TEST_CASE("pnorm bounds and monotonicity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e5, 1e5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = u(rng);
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    double prev = 0.0;
    for (int p = 2; p <= 200; p += 2) {
      const double pn = pnorm(v, p);
      CHECK(pn <= mx * (1 + 1e-14));
      CHECK(pn >= prev * (1 - 1e-14));
      prev = pn;
    }
    CHECK(pnorm(v, 200) >= 0.98 * mx);
    auto w = v;
    w[trial % 40] *= 1.5;
    CHECK(pnorm(w, 8) >= pnorm(v, 8));
  }
}

TEST_CASE("load zone and support corners") {
  auto mesh = StructuredMesh::rectangle(6, 4, 1.0, 1.0);
  BoundaryConditions bc;
  for (int r = 0; r <= 4; ++r) {
    bc.fixed_dofs.push_back(2 * mesh.node_at(r, 0));
    bc.fixed_dofs.push_back(2 * mesh.node_at(r, 0) + 1);
  }
  std::sort(bc.fixed_dofs.begin(), bc.fixed_dofs.end());
  bc.loads = {{2 * mesh.node_at(4, 6) + 1, -1.0}};
  CHECK(load_zone_elements(mesh, bc, -1).empty());
  CHECK(load_zone_elements(mesh, bc, 0) == std::vector<int>{mesh.element_at(3, 5)});
  const auto zone = load_zone_elements(mesh, bc, 1);
  CHECK(zone.size() == 3);
  const auto corners = support_corner_elements(mesh, bc);
  CHECK(corners == std::vector<int>{mesh.element_at(0, 0), mesh.element_at(3, 0)});
}

TEST_CASE("pnorm constraint on a single point") {
  const auto mat = OrthotropicMaterial::epoxy_glass();
  DesignState d = DesignState::uniform(12, 0.7, 0.4);
  GradProblem gp = cantilever_grad_problem(4, 3, mat, d);
  gp.clusters.clusters[0] = {{5}};
  gp.clusters.clusters[1] = {{2}};
  const SolvedState s = gp.model.solve(d);
  const StressField st = gp.model.element_stresses(d, s.u());
  const auto vals = constraint_values(gp.model, d, s, gp.clusters, 8, {1.0, 1.0});
  CHECK(vals[0] == doctest::Approx(std::abs(st.sigma1[5])).epsilon(1e-10));
  CHECK(vals[1] == doctest::Approx(std::abs(st.sigma2[2])).epsilon(1e-10));
}

TEST_CASE("constraint ordering is cluster major") {
  const auto mat = OrthotropicMaterial::epoxy_glass();
  DesignState d = random_design(24, 3, 0.3, 0.9);
  auto mesh = StructuredMesh::rectangle(6, 4, 1.0, 1.0);
  GradProblem gp = cantilever_grad_problem(6, 4, mat, d);
  const SolvedState s = gp.model.solve(d);
  const StressField st = gp.model.element_stresses(d, s.u());
  const ClusterSet c = build_clusters(st, 2, 5, {});
  const ConstraintBlock b = constraint_values_and_sensitivities(gp.model, d, s, c, 8, {2.0, 3.0});
  REQUIRE(b.constraints.size() == 4);
  const int dirs[] = {0, 1, 0, 1};
  const int clus[] = {0, 0, 1, 1};
  for (int k = 0; k < 4; ++k) {
    CHECK(b.constraints[k].direction == dirs[k]);
    CHECK(b.constraints[k].cluster == clus[k]);
    CHECK(b.constraints[k].limit == (dirs[k] == 0 ? 2.0 : 3.0));
    CHECK(b.constraints[k].normalized ==
          doctest::Approx(b.constraints[k].value / b.constraints[k].limit - 1.0));
  }
  CHECK(b.constraints[0].value >= b.constraints[2].value);
}

TEST_CASE("single element density sensitivity") {
  auto mesh = StructuredMesh::rectangle(1, 1, 1.0, 1.0);
  BoundaryConditions bc;
  const int bl = mesh.node_at(1, 0), tl = mesh.node_at(0, 0), br = mesh.node_at(1, 1);
  bc.fixed_dofs = {2 * bl, 2 * bl + 1, 2 * tl, 2 * tl + 1};
  std::sort(bc.fixed_dofs.begin(), bc.fixed_dofs.end());
  bc.loads = {{2 * br, 1.0}};
  FeModel model(mesh, bc, OrthotropicMaterial::epoxy_glass());
  DesignState d = DesignState::uniform(1, 0.6, 0.3);
  const SolvedState s = model.solve(d);
  ClusterSet c;
  c.clusters[0] = {{0}};
  c.clusters[1] = {{0}};
  const ConstraintBlock b = constraint_values_and_sensitivities(model, d, s, c, 8, {1.0, 1.0});
  // With a single element the P-norm is |sigma| = sqrt(rho) * |E T2 B u| and
  // u ~ 1/rho^3, so d|sigma|/drho = (0.5 - 3) |sigma| / rho.
  CHECK(b.constraints[0].dvalue_drho[0] ==
        doctest::Approx(-2.5 * b.constraints[0].value / 0.6).epsilon(1e-8));
}

TEST_CASE("adjoint gradient equals direct differentiation") {
  const auto mat = OrthotropicMaterial::epoxy_glass();
  auto mesh = StructuredMesh::rectangle(2, 1, 1.0, 1.0);
  BoundaryConditions bc;
  for (int r = 0; r <= 1; ++r) {
    bc.fixed_dofs.push_back(2 * mesh.node_at(r, 0));
    bc.fixed_dofs.push_back(2 * mesh.node_at(r, 0) + 1);
  }
  std::sort(bc.fixed_dofs.begin(), bc.fixed_dofs.end());
  bc.loads = {{2 * mesh.node_at(1, 2) + 1, -1.0}, {2 * mesh.node_at(0, 2), 0.4}};
  FeModel model(mesh, bc, mat);
  DesignState d;
  d.rho = Eigen::Vector2d(0.8, 0.45);
  d.theta = Eigen::Vector2d(0.6, -1.2);
  const SolvedState s = model.solve(d);
  ClusterSet c;
  c.clusters[0] = {{0, 1}};
  c.clusters[1] = {{1, 0}};
  const std::array<double, 2> lim{1.0, 1.0};
  const ConstraintBlock b = constraint_values_and_sensitivities(model, d, s, c, 8, lim);

  auto pn_at = [&](const DesignState& ds, const Eigen::VectorXd& u, int dir) {
    const StressField st = model.element_stresses(ds, u);
    std::vector<double> v;
    for (int e : c.clusters[dir][0]) v.push_back(smooth_abs(st.direction(dir)[e], 1e-6));
    return pnorm(v, 8);
  };
  const double h = 1e-7;
  for (int e = 0; e < 2; ++e) {
    for (int var = 0; var < 2; ++var) {
      // du/dx = -K^-1 (dK/dx) u, solved directly for this variable
      const Vector8 ue = model.element_displacement(s.u(), e);
      const Matrix3 ce = var == 0 ? Matrix3(transformed_constitutive(model.constitutive(), d.theta[e]))
                                  : Matrix3(transformed_constitutive_derivative(model.constitutive(), d.theta[e]));
      const double scale = var == 0 ? stiffness_interpolation_derivative(d.rho[e], 3.0, 1e-4)
                                    : stiffness_interpolation(d.rho[e], 3.0, 1e-4);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s.u().size());
      model.scatter_add(e, -scale * (model.basis().stiffness(ce) * ue), rhs);
      const Eigen::VectorXd du = s.adjoint_solve(rhs);
      for (int dir = 0; dir < 2; ++dir) {
        DesignState dp = d, dm = d;
        (var == 0 ? dp.rho : dp.theta)[e] += h;
        (var == 0 ? dm.rho : dm.theta)[e] -= h;
        const double explicit_part = (pn_at(dp, s.u(), dir) - pn_at(dm, s.u(), dir)) / (2 * h);
        const double implicit_part =
            (pn_at(d, s.u() + h * du, dir) - pn_at(d, s.u() - h * du, dir)) / (2 * h);
        const double direct = explicit_part + implicit_part;
        const StressConstraint& sc = b.constraints[dir];
        const double adj = var == 0 ? sc.dvalue_drho[e] : sc.dvalue_dtheta[e];
        CHECK(adj == doctest::Approx(direct).epsilon(1e-5));
      }
    }
  }
}
