// Orthotropic plane-stress constitutive law and Voigt transformations.
//
// Voigt ordering is [11, 22, 12] with engineering shear strain. Stresses in
// principal material axes are obtained from global strains through
// sigma = E * T2(theta) * eps, and the global stiffness is
// E'(theta) = T1(theta)^-1 * E * T2(theta).
#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fibertopo {

using Matrix3 = Eigen::Matrix3d;

class ConstitutiveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct OrthotropicMaterial {
  double e1 = 0.0;   ///< modulus along fibers (Pa)
  double e2 = 0.0;   ///< transverse modulus (Pa)
  double g12 = 0.0;  ///< in-plane shear modulus (Pa)
  double nu12 = 0.0;
  double nu21 = 0.0;

  bool operator==(const OrthotropicMaterial&) const = default;

  /// Throws ConstitutiveError when moduli are non-positive, the law is not
  /// positive definite, or nu21*e1 and nu12*e2 differ by more than 0.1%.
  void validate() const;

  /// Epoxy glass, the material used throughout the case studies.
  static OrthotropicMaterial epoxy_glass();

  /// Isotropic material expressed in orthotropic form (g12 = E / 2(1+nu)).
  static OrthotropicMaterial isotropic(double modulus, double poisson);
};

inline constexpr double kReciprocityTolerance = 1e-3;

Matrix3 constitutive_matrix(const OrthotropicMaterial& mat);

struct TransformPair {
  Matrix3 t1;  ///< stress transformation, global -> material
  Matrix3 t2;  ///< strain transformation, global -> material
};

TransformPair transform_matrices(double theta);

/// T1(theta)^-1, formed analytically as T1(-theta).
Matrix3 inverse_stress_transform(double theta);

struct TransformDerivatives {
  Matrix3 dt1inv;  ///< d(T1^-1)/dtheta
  Matrix3 dt2;     ///< dT2/dtheta
};

TransformDerivatives transform_derivatives(double theta);

/// E'(theta) for a precomputed principal constitutive matrix.
Matrix3 transformed_constitutive(const Matrix3& e, double theta);
Matrix3 transformed_constitutive(const OrthotropicMaterial& mat, double theta);

/// dE'/dtheta = dT1inv * E * T2 + T1inv * E * dT2.
Matrix3 transformed_constitutive_derivative(const Matrix3& e, double theta);

}  // namespace fibertopo
