#pragma once

#include <Eigen/Dense>

#include "fibertopo/fem.hpp"

namespace fibertopo {

struct ObjectiveResult {
  double compliance = 0.0;   ///< N*m
  Eigen::VectorXd dc_drho;
  Eigen::VectorXd dc_dtheta;
};

/// c = sum_e eta_K(rho_e) u_e^T k_e u_e, with
///   dc/drho_e   = -eta_K'(rho_e) u_e^T k_e u_e
///   dc/dtheta_e = -eta_K(rho_e) u_e^T dk_e/dtheta u_e.
/// The objective is self-adjoint, so no extra solve is needed.
ObjectiveResult compliance_and_gradients(const FeModel& model, const DesignState& design,
                                         const SolvedState& solved);

}  // namespace fibertopo
