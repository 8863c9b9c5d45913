#include "fibertopo/material.hpp"

#include <cmath>

namespace fibertopo {

void OrthotropicMaterial::validate() const {
  if (!(e1 > 0.0) || !(e2 > 0.0) || !(g12 > 0.0)) {
    throw ConstitutiveError("material: e1, e2 and g12 must be positive");
  }
  if (!(1.0 - nu12 * nu21 > 0.0)) {
    throw ConstitutiveError("material: 1 - nu12*nu21 must be positive");
  }
  const double lhs = nu21 * e1;
  const double rhs = nu12 * e2;
  if (rhs == 0.0) {
    if (lhs != 0.0) {
      throw ConstitutiveError("material: nu21*e1 must vanish when nu12*e2 does");
    }
    return;
  }
  if (std::abs(lhs - rhs) / std::abs(rhs) > kReciprocityTolerance) {
    throw ConstitutiveError("material: reciprocity nu21*e1 = nu12*e2 violated");
  }
}

OrthotropicMaterial OrthotropicMaterial::epoxy_glass() {
  return {38.6e9, 8.27e9, 4.14e9, 0.27, 0.0578};
}

OrthotropicMaterial OrthotropicMaterial::isotropic(double modulus, double poisson) {
  return {modulus, modulus, modulus / (2.0 * (1.0 + poisson)), poisson, poisson};
}

Matrix3 constitutive_matrix(const OrthotropicMaterial& mat) {
  mat.validate();
  const double d = 1.0 - mat.nu12 * mat.nu21;
  Matrix3 e = Matrix3::Zero();
  e(0, 0) = mat.e1 / d;
  e(0, 1) = mat.nu12 * mat.e2 / d;
  e(1, 0) = mat.nu21 * mat.e1 / d;
  e(1, 1) = mat.e2 / d;
  e(2, 2) = mat.g12;
  return e;
}

TransformPair transform_matrices(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cc = c * c;
  const double ss = s * s;
  const double cs = c * s;
  TransformPair out;
  out.t1 << cc, ss, 2.0 * cs,
            ss, cc, -2.0 * cs,
            -cs, cs, cc - ss;
  out.t2 << cc, ss, cs,
            ss, cc, -cs,
            -2.0 * cs, 2.0 * cs, cc - ss;
  return out;
}

Matrix3 inverse_stress_transform(double theta) {
  return transform_matrices(-theta).t1;
}

TransformDerivatives transform_derivatives(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double s2 = 2.0 * c * s;    // d(s^2), -d(c^2)
  const double c2 = c * c - s * s;  // d(cs)
  TransformDerivatives out;
  // T1^-1 = [c2 s2 -2cs; s2 c2 2cs; cs -cs c2-s2]
  out.dt1inv << -s2, s2, -2.0 * c2,
                s2, -s2, 2.0 * c2,
                c2, -c2, -2.0 * s2;
  out.dt2 << -s2, s2, c2,
             s2, -s2, -c2,
             -2.0 * c2, 2.0 * c2, -2.0 * s2;
  return out;
}

Matrix3 transformed_constitutive(const Matrix3& e, double theta) {
  return inverse_stress_transform(theta) * e * transform_matrices(theta).t2;
}

Matrix3 transformed_constitutive(const OrthotropicMaterial& mat, double theta) {
  return transformed_constitutive(constitutive_matrix(mat), theta);
}

Matrix3 transformed_constitutive_derivative(const Matrix3& e, double theta) {
  const auto d = transform_derivatives(theta);
  return d.dt1inv * e * transform_matrices(theta).t2 +
         inverse_stress_transform(theta) * e * d.dt2;
}

}  // namespace fibertopo
