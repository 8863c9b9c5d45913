#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fibertopo/compliance.hpp"
#include "fibertopo/fem.hpp"

using namespace fibertopo;
using std::numbers::pi;

namespace {

// Reciprocity holds exactly, so sym(E) == E.
const OrthotropicMaterial kExact{2.0e9, 1.0e9, 0.5e9, 0.4, 0.2};

BoundaryConditions clamp_left(const StructuredMesh& mesh, std::vector<std::pair<int, double>> loads) {
  BoundaryConditions bc;
  for (int r = 0; r <= mesh.nely(); ++r) {
    const int n = mesh.node_at(r, 0);
    if (n < 0) continue;
    bc.fixed_dofs.push_back(2 * n);
    bc.fixed_dofs.push_back(2 * n + 1);
  }
  std::sort(bc.fixed_dofs.begin(), bc.fixed_dofs.end());
  bc.loads = std::move(loads);
  return bc;
}

FeModel cantilever(int nelx, int nely, const OrthotropicMaterial& mat = kExact) {
  auto mesh = StructuredMesh::rectangle(nelx, nely, 1.0, 1.0);
  const int tip = mesh.node_at(nely, nelx);
  auto bc = clamp_left(mesh, {{2 * tip + 1, -1.0}});
  return FeModel(std::move(mesh), std::move(bc), mat);
}

}  // namespace

TEST_CASE("strain displacement patterns") {
  const StrainDisplacement b = strain_displacement(1.0);
  Vector8 u;
  u << 0.3, 0, 0.3, 0, 0.3, 0, 0.3, 0;
  CHECK((b * u).norm() < 1e-15);
  // nodes: bottom-left, bottom-right, top-right, top-left
  u << 0, 0, 1e-3, 0, 1e-3, 0, 0, 0;
  CHECK(((b * u) - Eigen::Vector3d(1e-3, 0, 0)).norm() < 1e-15);
  u << 0, 0, 0, 0, 2e-3, 0, 2e-3, 0;
  CHECK(((b * u) - Eigen::Vector3d(0, 0, 2e-3)).norm() < 1e-15);
  // strains scale with 1/a
  u << 0, 0, 1e-3, 0, 1e-3, 0, 0, 0;
  CHECK((strain_displacement(0.5) * u)[0] == doctest::Approx(2e-3));
}

TEST_CASE("element stiffness properties") {
  const auto mat = OrthotropicMaterial::epoxy_glass();
  for (double t : {-2.5, -0.1, 0.0, 0.7, 1.9}) {
    const Matrix8 k = element_stiffness(mat, t, 1e-3, 1.0);
    CHECK((k - k.transpose()).norm() <= 1e-12 * k.norm());
    CHECK((element_stiffness(mat, t + pi, 1e-3, 1.0) - k).norm() <= 1e-12 * k.norm());
    Eigen::SelfAdjointEigenSolver<Matrix8> es(k);
    const auto ev = es.eigenvalues();
    int zeros = 0;
    for (int i = 0; i < 8; ++i) {
      CHECK(ev[i] > -1e-9 * ev.maxCoeff());
      if (std::abs(ev[i]) < 1e-9 * ev.maxCoeff()) ++zeros;
    }
    CHECK(zeros == 3);

    const double h = 1e-6;
    const Matrix8 fd = (element_stiffness(mat, t + h, 1e-3, 1.0) -
                        element_stiffness(mat, t - h, 1e-3, 1.0)) / (2 * h);
    const Matrix8 dk = element_stiffness_dtheta(mat, t, 1e-3, 1.0);
    CHECK((dk - fd).norm() <= 1e-6 * std::max(dk.norm(), 1e-6 * k.norm()));
  }
}

TEST_CASE("square element stiffness does not depend on element size") {
  const auto mat = OrthotropicMaterial::epoxy_glass();
  const Matrix8 a = element_stiffness(mat, 0.4, 1e-3, 2.0);
  const Matrix8 b = element_stiffness(mat, 0.4, 5.0, 2.0);
  CHECK((a - b).norm() <= 1e-12 * a.norm());
}

TEST_CASE("interpolation functions") {
  CHECK(stiffness_interpolation(0.5, 3.0, 1e-4) == doctest::Approx(0.125));
  CHECK(stiffness_interpolation(0.0, 3.0, 1e-4) == doctest::Approx(1e-12));
  CHECK(stiffness_interpolation_derivative(0.5, 3.0, 1e-4) == doctest::Approx(0.75));
  CHECK(stress_interpolation(0.25) == 0.5);
  CHECK(stress_interpolation(0.0) == 0.0);
}

TEST_CASE("assembly scaling") {
  const FeModel model = cantilever(3, 2);
  const int n = model.num_elements();
  const SparseMatrix k1 = model.assemble_stiffness(DesignState::uniform(n, 1.0, 0.3));
  const SparseMatrix kh = model.assemble_stiffness(DesignState::uniform(n, 0.5, 0.3));
  CHECK((SparseMatrix(kh - 0.125 * k1)).norm() <= 1e-14 * k1.norm());
  CHECK((SparseMatrix(k1 - SparseMatrix(k1.transpose()))).norm() <= 1e-14 * k1.norm());
}

TEST_CASE("single element assembly equals element stiffness") {
  const FeModel model = cantilever(1, 1);
  const SparseMatrix k = model.assemble_stiffness(DesignState::uniform(1, 1.0, 0.6));
  const Matrix8 ke = element_stiffness(kExact, 0.6, 1.0, 1.0);
  const Eigen::MatrixXd kd(k);
  const auto& dofs = model.mesh().element_dofs(0);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) CHECK(kd(dofs[i], dofs[j]) == doctest::Approx(ke(i, j)));
  }
}

TEST_CASE("equilibrium solve") {
  SUBCASE("zero load gives zero displacement") {
    const FeModel model = cantilever(3, 2);
    const auto d = DesignState::uniform(6, 1.0, 0.0);
    const SolvedState s = model.solve(d, Eigen::VectorXd::Zero(model.mesh().num_dofs()));
    CHECK(s.u().norm() == 0.0);
  }
  SUBCASE("one element with an axial tip load matches a dense solve") {
    auto mesh = StructuredMesh::rectangle(1, 1, 1.0, 1.0);
    const int br = mesh.node_at(1, 1);
    const int tr = mesh.node_at(0, 1);
    auto bc = clamp_left(mesh, {{2 * br, 1e3}, {2 * tr, 1e3}});
    const FeModel model(mesh, bc, kExact);
    const SolvedState s = model.solve(DesignState::uniform(1, 1.0, 0.0));
    // free dofs in element order: bottom-right (2,3), top-right (4,5)
    const Matrix8 ke = element_stiffness(kExact, 0.0, 1.0, 1.0);
    const Eigen::Matrix4d kf = ke.block<4, 4>(2, 2);
    const Eigen::Vector4d uf = kf.ldlt().solve(Eigen::Vector4d(1e3, 0, 1e3, 0));
    CHECK(s.u()[2 * br] == doctest::Approx(uf[0]).epsilon(1e-12));
    CHECK(s.u()[2 * br + 1] == doctest::Approx(uf[1]).scale(uf[0]).epsilon(1e-12));
    CHECK(s.u()[2 * tr] == doctest::Approx(uf[2]).epsilon(1e-12));
  }
  SUBCASE("linearity and residual") {
    const FeModel model = cantilever(4, 3, OrthotropicMaterial::epoxy_glass());
    const auto d = DesignState::uniform(12, 0.7, -0.4);
    const SolvedState s1 = model.solve(d);
    const SolvedState s2 = model.solve(d, 2.0 * s1.force());
    CHECK((s2.u() - 2.0 * s1.u()).norm() <= 1e-12 * s2.u().norm());
    CHECK(s1.residual_norm() <= 1e-8 * s1.force().lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("adjoint solves reuse the factorization") {
  const FeModel model = cantilever(4, 3, OrthotropicMaterial::epoxy_glass());
  DesignState d = DesignState::uniform(12, 0.6, 0.2);
  d.rho[5] = 0.3;
  const SolvedState s = model.solve(d);
  CHECK(s.adjoint_solve(Eigen::VectorXd::Zero(s.u().size())).norm() == 0.0);
  CHECK((s.adjoint_solve(s.force()) - s.u()).norm() <= 1e-12 * s.u().norm());

  Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(s.u().size(), -1.0, 1.0);
  for (int dof : model.bc().fixed_dofs) rhs[dof] = 0.0;
  const Eigen::VectorXd lam = s.adjoint_solve(rhs);
  Eigen::VectorXd r = model.assemble_stiffness(d) * lam - rhs;
  for (int dof : model.bc().fixed_dofs) r[dof] = 0.0;
  CHECK(r.norm() <= 1e-8 * rhs.norm());
  for (int dof : model.bc().fixed_dofs) CHECK(lam[dof] == 0.0);
}

TEST_CASE("unconstrained model is rejected") {
  auto mesh = StructuredMesh::rectangle(2, 2, 1.0, 1.0);
  BoundaryConditions bc;
  bc.fixed_dofs = {0, 1};
  bc.loads = {{10, 1.0}};
  CHECK_THROWS(FeModel(mesh, bc, kExact));
}

TEST_CASE("penalized element stresses") {
  const FeModel model = cantilever(4, 3, OrthotropicMaterial::epoxy_glass());
  DesignState d = DesignState::uniform(12, 1.0, 0.3);
  const SolvedState s = model.solve(d);
  const StressField full = model.element_stresses(d, s.u());
  DesignState q = d;
  q.rho.setConstant(0.25);
  q.rho[7] = 0.0;
  const StressField quarter = model.element_stresses(q, s.u());
  for (int e = 0; e < 12; ++e) {
    const double f = e == 7 ? 0.0 : 0.5;
    CHECK(quarter.sigma1[e] == doctest::Approx(f * full.sigma1[e]));
    CHECK(quarter.sigma2[e] == doctest::Approx(f * full.sigma2[e]));
    CHECK(quarter.tau12[e] == doctest::Approx(f * full.tau12[e]));
  }
  CHECK(quarter.sigma1[7] == 0.0);
  const StressField raw = model.raw_stresses(q, s.u());
  CHECK(raw.sigma1[3] == doctest::Approx(full.sigma1[3]));
}

TEST_CASE("uniaxial strain patch stresses") {
  const FeModel model = cantilever(1, 1);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(model.mesh().num_dofs());
  const auto& nodes = model.mesh().element_nodes(0);
  u[2 * nodes[1]] = 1.0;
  u[2 * nodes[2]] = 1.0;
  const StressField s = model.element_stresses(DesignState::uniform(1, 1.0, 0.0), u);
  const Matrix3 e = constitutive_matrix(kExact);
  CHECK(s.sigma1[0] == doctest::Approx(e(0, 0)));
  CHECK(s.sigma2[0] == doctest::Approx(e(1, 0)));
  CHECK(s.tau12[0] == doctest::Approx(0.0).scale(e(0, 0)));
}

TEST_CASE("two compliance forms agree") {
  const FeModel model = cantilever(5, 4, OrthotropicMaterial::epoxy_glass());
  DesignState d = DesignState::uniform(20, 0.8, 0.0);
  for (int e = 0; e < 20; ++e) {
    d.rho[e] = 0.3 + 0.03 * e;
    d.theta[e] = -1.5 + 0.15 * e;
  }
  const SolvedState s = model.solve(d);
  const ObjectiveResult obj = compliance_and_gradients(model, d, s);
  CHECK(obj.compliance == doctest::Approx(s.u().dot(s.force())).epsilon(1e-8));
}

TEST_CASE("inactive cells behave like void elements") {
  std::vector<bool> mask(12, true);
  mask[3] = false;  // top-right corner cell of a 4x3 grid
  auto holed = StructuredMesh::from_mask(4, 3, mask, 1.0, 1.0);
  auto full = StructuredMesh::rectangle(4, 3, 1.0, 1.0);
  const int tip_h = holed.node_at(3, 4);
  const int tip_f = full.node_at(3, 4);
  const FeModel mh(holed, clamp_left(holed, {{2 * tip_h + 1, -1.0}}), kExact);
  const FeModel mf(full, clamp_left(full, {{2 * tip_f + 1, -1.0}}), kExact);
  DesignState dh = DesignState::uniform(11, 0.9, 0.2);
  DesignState df = DesignState::uniform(12, 0.9, 0.2);
  df.rho[full.element_at(0, 3)] = 0.0;
  const SolvedState sh = mh.solve(dh);
  const SolvedState sf = mf.solve(df);
  const double ch = sh.u().dot(sh.force());
  const double cf = sf.u().dot(sf.force());
  CHECK(ch == doctest::Approx(cf).epsilon(1e-8));
  const StressField th = mh.element_stresses(dh, sh.u());
  const StressField tf = mf.element_stresses(df, sf.u());
  for (int e = 0; e < 11; ++e) {
    const auto [r, c] = holed.element_cell(e);
    CHECK(th.sigma1[e] == doctest::Approx(tf.sigma1[full.element_at(r, c)]).epsilon(1e-6));
  }
}
