#pragma once

#include <Eigen/Dense>

#include "bikecross/params.hpp"

namespace bikecross {

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix35d = Eigen::Matrix<double, 3, 5>;

// Step obstacle placed by arc length along the reference path.
struct Obstacle {
  double s_o = 0.0;    // arc-length position (m)
  double h_o = 0.04;   // step height (m)
  double width = 0.3;  // lateral extent (m)
  void validate(const BikebotParams& p) const;
};

// Per-axis restitution applied to the pre-impact contact-point velocity.
struct RestitutionModel {
  double e_x = 0.2;
  double e_y = 1.0;
  double e_z = 0.1;
  void validate() const;
  Eigen::Vector3d vec() const { return {e_x, e_y, e_z}; }
};

struct ContactGeometry {
  double L = 0.0;      // horizontal offset from wheel center to contact (m)
  double phi_c = 0.0;  // impact angle (rad)
};

struct ImpactSolution {
  Vector5d qdot_plus = Vector5d::Zero();
  Eigen::Vector3d f_impulse{0, 0, 0};
  double cond = 0.0;      // condition number of the 8x8 block system
  double residual = 0.0;  // infinity-norm residual of the linear solve
};

struct PlanarVelocities {
  double v = 0.0;
  double psi_dot = 0.0;
  double dot_varphi_b = 0.0;
  double dot_z = 0.0;  // logged, then discarded by the planar model
};

// Record of one wheel-obstacle impact.
struct ImpactEvent {
  double t_f = 0.0;
  Vector5d q = Vector5d::Zero();
  Vector5d qdot_minus = Vector5d::Zero();
  Vector5d qdot_plus = Vector5d::Zero();
  Vector5d qdot_star = Vector5d::Zero();  // after any velocity re-initialization
  Eigen::Vector3d f_impulse{0, 0, 0};
  double h_o = 0.0;
  double cond = 0.0;
};

// L = sqrt(2*R_w*h_o - h_o^2) and phi_c = phi_g + psi. Throws BadHeight
// unless 0 <= h_o <= 2*R_w.
ContactGeometry contact_geometry(double h_o, const BikebotParams& p,
                                 double psi = 0.0, double phi = 0.0,
                                 double varphi_b = 0.0);

// Analytic 3x5 Jacobian of the contact point w.r.t. q = (x,y,z,psi,varphi_b).
Matrix35d impact_jacobian(const Vector5d& q, double h_o, double phi,
                          const BikebotParams& p);

// Momentum-balance solve for post-impact velocities and the impulsive force.
ImpactSolution post_impact(const Vector5d& q, const Vector5d& qdot_minus,
                           double h_o, const RestitutionModel& rest,
                           const BikebotParams& p, double phi);

// Planar components recovered from the 5-DOF post-impact velocity.
PlanarVelocities project_to_planar(const Vector5d& qdot_plus, double psi);

// 0.5 * qdot^T D qdot with D = diag(m, m, m, J_z, J_t).
double impact_kinetic_energy(const Vector5d& qdot, const BikebotParams& p);

}  // namespace bikecross
