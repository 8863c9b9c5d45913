#include "fibertopo/compliance.hpp"

namespace fibertopo {

ObjectiveResult compliance_and_gradients(const FeModel& model, const DesignState& design,
                                         const SolvedState& solved) {
  const int n = model.num_elements();
  ObjectiveResult out;
  out.dc_drho.resize(n);
  out.dc_dtheta.resize(n);
  const double p = model.penalty();
  const double floor = model.density_floor();
  for (int e = 0; e < n; ++e) {
    const Vector8 ue = model.element_displacement(solved.u(), e);
    const Matrix3& c = model.constitutive();
    const Matrix8 ke = model.basis().stiffness(transformed_constitutive(c, design.theta[e]));
    const Matrix8 dke =
        model.basis().stiffness(transformed_constitutive_derivative(c, design.theta[e]));
    const double energy = ue.dot(ke * ue);
    const double eta = stiffness_interpolation(design.rho[e], p, floor);
    out.compliance += eta * energy;
    out.dc_drho[e] = -stiffness_interpolation_derivative(design.rho[e], p, floor) * energy;
    out.dc_dtheta[e] = -eta * ue.dot(dke * ue);
  }
  return out;
}

}  // namespace fibertopo
