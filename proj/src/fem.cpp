#include "fibertopo/fem.hpp"

#include <algorithm>
#include <cmath>

namespace fibertopo {

namespace {

constexpr std::array<double, 4> kNodeXi{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kNodeEta{-1.0, -1.0, 1.0, 1.0};

}  // namespace

StrainDisplacement strain_displacement(double elem_size, double xi, double eta) {
  StrainDisplacement b = StrainDisplacement::Zero();
  const double scale = 2.0 / elem_size;
  for (int k = 0; k < 4; ++k) {
    const double dx = scale * 0.25 * kNodeXi[k] * (1.0 + eta * kNodeEta[k]);
    const double dy = scale * 0.25 * kNodeEta[k] * (1.0 + xi * kNodeXi[k]);
    b(0, 2 * k) = dx;
    b(1, 2 * k + 1) = dy;
    b(2, 2 * k) = dy;
    b(2, 2 * k + 1) = dx;
  }
  return b;
}

ElementBasis ElementBasis::make(double elem_size, double thickness) {
  ElementBasis basis;
  for (auto& p : basis.parts) p.setZero();
  const double g = 1.0 / std::sqrt(3.0);
  const double det_j = 0.25 * elem_size * elem_size;
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      const StrainDisplacement b = strain_displacement(elem_size, xi, eta);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          basis.parts[3 * i + j] += thickness * det_j * b.row(i).transpose() * b.row(j);
        }
      }
    }
  }
  basis.b_center = strain_displacement(elem_size);
  return basis;
}

Matrix8 ElementBasis::stiffness(const Matrix3& c) const {
  Matrix8 k = Matrix8::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (c(i, j) != 0.0) k += c(i, j) * parts[3 * i + j];
    }
  }
  return k;
}

Matrix8 element_stiffness(const OrthotropicMaterial& mat, double theta, double elem_size,
                          double thickness) {
  return ElementBasis::make(elem_size, thickness)
      .stiffness(transformed_constitutive(symmetric_constitutive(mat), theta));
}

Matrix8 element_stiffness_dtheta(const OrthotropicMaterial& mat, double theta,
                                 double elem_size, double thickness) {
  return ElementBasis::make(elem_size, thickness)
      .stiffness(transformed_constitutive_derivative(symmetric_constitutive(mat), theta));
}

double stiffness_interpolation(double rho, double p, double floor) {
  return std::pow(std::max(rho, floor), p);
}

double stiffness_interpolation_derivative(double rho, double p, double floor) {
  if (rho < floor) return 0.0;
  return p * std::pow(rho, p - 1.0);
}

double stress_interpolation(double rho) {
  return std::sqrt(std::max(rho, 0.0));
}

Matrix3 symmetric_constitutive(const OrthotropicMaterial& mat) {
  const Matrix3 e = constitutive_matrix(mat);
  return 0.5 * (e + e.transpose());
}

// SolvedState ---------------------------------------------------------------

Eigen::VectorXd SolvedState::adjoint_solve(const Eigen::VectorXd& rhs) const {
  const auto& map = *free_of_dof_;
  Eigen::VectorXd r(factor_->rows());
  for (size_t d = 0; d < map.size(); ++d) {
    if (map[d] >= 0) r[map[d]] = rhs[static_cast<Eigen::Index>(d)];
  }
  const Eigen::VectorXd x = factor_->solve(r);
  if (factor_->info() != Eigen::Success) {
    throw SolverError("adjoint solve failed");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rhs.size());
  for (size_t d = 0; d < map.size(); ++d) {
    if (map[d] >= 0) out[static_cast<Eigen::Index>(d)] = x[map[d]];
  }
  return out;
}

double SolvedState::residual_norm() const {
  const auto& map = *free_of_dof_;
  Eigen::VectorXd uf(k_free_->rows());
  Eigen::VectorXd ff(k_free_->rows());
  for (size_t d = 0; d < map.size(); ++d) {
    if (map[d] >= 0) {
      uf[map[d]] = u_[static_cast<Eigen::Index>(d)];
      ff[map[d]] = f_[static_cast<Eigen::Index>(d)];
    }
  }
  return ((*k_free_) * uf - ff).lpNorm<Eigen::Infinity>();
}

// FeModel -------------------------------------------------------------------

FeModel::FeModel(StructuredMesh mesh, BoundaryConditions bc, OrthotropicMaterial mat,
                 double penalty, double density_floor)
    : mesh_(std::move(mesh)),
      bc_(std::move(bc)),
      mat_(mat),
      e_(symmetric_constitutive(mat)),
      basis_(ElementBasis::make(mesh_.elem_size(), mesh_.thickness())),
      penalty_(penalty),
      floor_(density_floor) {
  if (!(penalty_ >= 1.0)) throw SolverError("penalty must be >= 1");
  bc_.validate(mesh_);
  std::vector<int> map(mesh_.num_dofs(), -1);
  int next = 0;
  for (int d = 0; d < mesh_.num_dofs(); ++d) {
    if (!std::binary_search(bc_.fixed_dofs.begin(), bc_.fixed_dofs.end(), d)) {
      free_dofs_.push_back(d);
      map[d] = next++;
    }
  }
  free_of_dof_ = std::make_shared<const std::vector<int>>(std::move(map));
}

SparseMatrix FeModel::assemble_stiffness(const DesignState& design) const {
  design.validate(num_elements());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(num_elements()) * 64);
  for (int e = 0; e < num_elements(); ++e) {
    const Matrix8 k = stiffness_interpolation(design.rho[e], penalty_, floor_) *
                      basis_.stiffness(transformed_constitutive(e_, design.theta[e]));
    const auto& dofs = mesh_.element_dofs(e);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) trip.emplace_back(dofs[i], dofs[j], k(i, j));
    }
  }
  SparseMatrix k(mesh_.num_dofs(), mesh_.num_dofs());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

SolvedState FeModel::solve(const DesignState& design) const {
  return solve(design, bc_.force_vector(mesh_.num_dofs()));
}

SolvedState FeModel::solve(const DesignState& design, const Eigen::VectorXd& force) const {
  design.validate(num_elements());
  const auto& map = *free_of_dof_;
  const int nfree = num_free_dofs();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(num_elements()) * 64);
  for (int e = 0; e < num_elements(); ++e) {
    const Matrix8 k = stiffness_interpolation(design.rho[e], penalty_, floor_) *
                      basis_.stiffness(transformed_constitutive(e_, design.theta[e]));
    const auto& dofs = mesh_.element_dofs(e);
    for (int i = 0; i < 8; ++i) {
      const int fi = map[dofs[i]];
      if (fi < 0) continue;
      for (int j = 0; j < 8; ++j) {
        const int fj = map[dofs[j]];
        if (fj >= 0) trip.emplace_back(fi, fj, k(i, j));
      }
    }
  }
  auto kf = std::make_shared<SparseMatrix>(nfree, nfree);
  kf->setFromTriplets(trip.begin(), trip.end());

  auto factor = std::make_shared<SolvedState::Factorization>(*kf);
  if (factor->info() != Eigen::Success) {
    throw SolverError("stiffness factorization failed (under-constrained model?)");
  }

  Eigen::VectorXd ff(nfree);
  for (int i = 0; i < nfree; ++i) ff[i] = force[free_dofs_[i]];
  const Eigen::VectorXd uf = factor->solve(ff);
  if (factor->info() != Eigen::Success || !uf.allFinite()) {
    throw SolverError("equilibrium solve failed");
  }

  SolvedState out;
  out.u_ = Eigen::VectorXd::Zero(mesh_.num_dofs());
  for (int i = 0; i < nfree; ++i) out.u_[free_dofs_[i]] = uf[i];
  out.f_ = force;
  out.k_free_ = std::move(kf);
  out.factor_ = std::move(factor);
  out.free_of_dof_ = free_of_dof_;
  return out;
}

Vector8 FeModel::element_displacement(const Eigen::VectorXd& u, int e) const {
  Vector8 ue;
  const auto& dofs = mesh_.element_dofs(e);
  for (int i = 0; i < 8; ++i) ue[i] = u[dofs[i]];
  return ue;
}

void FeModel::scatter_add(int e, const Vector8& v, Eigen::VectorXd& global) const {
  const auto& dofs = mesh_.element_dofs(e);
  for (int i = 0; i < 8; ++i) global[dofs[i]] += v[i];
}

StressField FeModel::raw_stresses(const DesignState& design, const Eigen::VectorXd& u) const {
  const int n = num_elements();
  StressField s{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int e = 0; e < n; ++e) {
    const Eigen::Vector3d sig =
        e_ * transform_matrices(design.theta[e]).t2 * basis_.b_center * element_displacement(u, e);
    s.sigma1[e] = sig[0];
    s.sigma2[e] = sig[1];
    s.tau12[e] = sig[2];
  }
  return s;
}

StressField FeModel::element_stresses(const DesignState& design, const Eigen::VectorXd& u) const {
  StressField s = raw_stresses(design, u);
  for (int e = 0; e < num_elements(); ++e) {
    const double eta = stress_interpolation(design.rho[e]);
    s.sigma1[e] *= eta;
    s.sigma2[e] *= eta;
    s.tau12[e] *= eta;
  }
  return s;
}

}  // namespace fibertopo
