// Penalized Q4 plane-stress finite element model.
#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fibertopo/material.hpp"
#include "fibertopo/mesh.hpp"

namespace fibertopo {

using Matrix8 = Eigen::Matrix<double, 8, 8>;
using Vector8 = Eigen::Matrix<double, 8, 1>;
using StrainDisplacement = Eigen::Matrix<double, 3, 8>;
using SparseMatrix = Eigen::SparseMatrix<double>;

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultDensityFloor = 1e-4;

/// B for a square bilinear element of edge `elem_size`, evaluated at the
/// natural coordinates (xi, eta); the centroid by default. Rows are
/// [eps11, eps22, gamma12]; columns follow counter-clockwise node order
/// starting at the bottom-left corner, (ux, uy) per node.
StrainDisplacement strain_displacement(double elem_size, double xi = 0.0, double eta = 0.0);

/// Element stiffness decomposed by constitutive entry: k = sum_ij C(i,j) * part(i,j).
/// Each part is integrated with 2x2 Gauss quadrature and includes thickness.
struct ElementBasis {
  std::array<Matrix8, 9> parts;
  StrainDisplacement b_center;

  static ElementBasis make(double elem_size, double thickness);
  Matrix8 stiffness(const Matrix3& c) const;
};

Matrix8 element_stiffness(const OrthotropicMaterial& mat, double theta, double elem_size,
                          double thickness);
Matrix8 element_stiffness_dtheta(const OrthotropicMaterial& mat, double theta,
                                 double elem_size, double thickness);

/// Symmetric part of the constitutive matrix. The published moduli satisfy
/// reciprocity only approximately; the finite element model uses this form so
/// that K stays symmetric positive definite.
Matrix3 symmetric_constitutive(const OrthotropicMaterial& mat);

/// Modified SIMP: eta_K(rho) = max(rho, floor)^p, and its derivative.
double stiffness_interpolation(double rho, double p, double floor);
double stiffness_interpolation_derivative(double rho, double p, double floor);

/// eta_S(rho) = sqrt(rho).
double stress_interpolation(double rho);

struct StressField {
  Eigen::VectorXd sigma1;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd tau12;

  /// Component 0 or 1 (principal directions 1 and 2).
  const Eigen::VectorXd& direction(int i) const { return i == 0 ? sigma1 : sigma2; }
};

class FeModel;

/// Displacements plus the retained factorization of the free-dof stiffness.
class SolvedState {
public:
  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& force() const { return f_; }

  /// Solves K * lambda = rhs on the free dofs, reusing the factorization;
  /// fixed dofs of the result are zero.
  Eigen::VectorXd adjoint_solve(const Eigen::VectorXd& rhs) const;

  /// ||K u - F||_inf over free dofs.
  double residual_norm() const;

private:
  friend class FeModel;
  using Factorization = Eigen::SimplicialLLT<SparseMatrix>;

  Eigen::VectorXd u_;
  Eigen::VectorXd f_;
  std::shared_ptr<const SparseMatrix> k_free_;
  std::shared_ptr<const Factorization> factor_;
  std::shared_ptr<const std::vector<int>> free_of_dof_;
};

class FeModel {
public:
  FeModel(StructuredMesh mesh, BoundaryConditions bc, OrthotropicMaterial mat,
          double penalty = 3.0, double density_floor = kDefaultDensityFloor);

  const StructuredMesh& mesh() const { return mesh_; }
  const BoundaryConditions& bc() const { return bc_; }
  const OrthotropicMaterial& material() const { return mat_; }
  const Matrix3& constitutive() const { return e_; }
  const ElementBasis& basis() const { return basis_; }
  double penalty() const { return penalty_; }
  double density_floor() const { return floor_; }
  int num_elements() const { return mesh_.num_elements(); }
  int num_free_dofs() const { return static_cast<int>(free_dofs_.size()); }

  /// Full-size global stiffness (all dofs, no boundary conditions).
  SparseMatrix assemble_stiffness(const DesignState& design) const;

  SolvedState solve(const DesignState& design) const;
  SolvedState solve(const DesignState& design, const Eigen::VectorXd& force) const;

  Vector8 element_displacement(const Eigen::VectorXd& u, int e) const;

  /// Penalized stresses in principal material axes:
  /// sigma_e = sqrt(rho_e) * E * T2(theta_e) * B_center * u_e.
  StressField element_stresses(const DesignState& design, const Eigen::VectorXd& u) const;

  /// Stresses without the density penalization (rho treated as 1).
  StressField raw_stresses(const DesignState& design, const Eigen::VectorXd& u) const;

  /// Scatter an element-level vector into a global vector.
  void scatter_add(int e, const Vector8& v, Eigen::VectorXd& global) const;

private:
  StructuredMesh mesh_;
  BoundaryConditions bc_;
  OrthotropicMaterial mat_;
  Matrix3 e_;
  ElementBasis basis_;
  double penalty_;
  double floor_;
  std::vector<int> free_dofs_;
  std::shared_ptr<const std::vector<int>> free_of_dof_;
};

}  // namespace fibertopo
