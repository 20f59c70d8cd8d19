#include "bikecross/impact.hpp"

#include <cmath>

#include "bikecross/errors.hpp"

namespace bikecross {

namespace {

Eigen::Matrix<double, 5, 5> mass_matrix(const BikebotParams& p) {
  Eigen::Matrix<double, 5, 5> D = Eigen::Matrix<double, 5, 5>::Zero();
  D(0, 0) = D(1, 1) = D(2, 2) = p.m_b;
  D(3, 3) = p.J_z;
  D(4, 4) = p.j_t();
  return D;
}

// Ground-projected steer angle and its roll sensitivity.
double phi_g_of(double phi, double varphi_b, const BikebotParams& p) {
  return std::atan(std::cos(p.epsilon) * std::tan(phi) / std::cos(varphi_b));
}

double dphi_g_dvarphi_b(double phi, double varphi_b, const BikebotParams& p) {
  const double u = std::cos(p.epsilon) * std::tan(phi) / std::cos(varphi_b);
  const double du = std::cos(p.epsilon) * std::tan(phi) *
                    std::tan(varphi_b) / std::cos(varphi_b);
  return du / (1.0 + u * u);
}

}  // namespace

void Obstacle::validate(const BikebotParams& p) const {
  if (!(h_o > 0.0 && h_o < p.R_w)) {
    throw ValidationError("obstacle height must satisfy 0 < h_o < R_w");
  }
  if (!(width > 0.0) || !std::isfinite(s_o)) {
    throw ValidationError("obstacle needs finite position and width > 0");
  }
}

void RestitutionModel::validate() const {
  for (double e : {e_x, e_y, e_z}) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw ValidationError("restitution coefficients must lie in [0, 1]");
    }
  }
}

ContactGeometry contact_geometry(double h_o, const BikebotParams& p, double psi,
                                 double phi, double varphi_b) {
  if (!(h_o >= 0.0 && h_o <= 2.0 * p.R_w)) {
    throw BadHeight("contact height must lie in [0, 2*R_w]");
  }
  ContactGeometry g;
  g.L = std::sqrt(std::max(0.0, 2.0 * p.R_w * h_o - h_o * h_o));
  g.phi_c = phi_g_of(phi, varphi_b, p) + psi;
  return g;
}

Matrix35d impact_jacobian(const Vector5d& q, double h_o, double phi,
                          const BikebotParams& p) {
  const double psi = q[3], varphi_b = q[4];
  const ContactGeometry g = contact_geometry(h_o, p, psi, phi, varphi_b);
  const double sc = std::sin(g.phi_c), cc = std::cos(g.phi_c);
  const double spsi = std::sin(psi), cpsi = std::cos(psi);
  const double dgd = dphi_g_dvarphi_b(phi, varphi_b, p);

  Matrix35d J = Matrix35d::Zero();
  J(0, 0) = 1.0;
  J(0, 3) = -p.l * spsi - g.L * sc;
  J(0, 4) = -g.L * sc * dgd;
  J(1, 1) = 1.0;
  J(1, 3) = p.l * cpsi + g.L * cc;
  J(1, 4) = g.L * cc * dgd;
  J(2, 2) = 1.0;
  return J;
}

ImpactSolution post_impact(const Vector5d& q, const Vector5d& qdot_minus,
                           double h_o, const RestitutionModel& rest,
                           const BikebotParams& p, double phi) {
  rest.validate();
  if (!qdot_minus.allFinite() || !q.allFinite()) {
    throw ValidationError("impact solve requires finite coordinates");
  }
  const Eigen::Matrix<double, 5, 5> D = mass_matrix(p);
  const Matrix35d Jc = impact_jacobian(q, h_o, phi, p);

  Eigen::Matrix<double, 8, 8> M = Eigen::Matrix<double, 8, 8>::Zero();
  M.topLeftCorner<5, 5>() = D;
  M.topRightCorner<5, 3>() = -Jc.transpose();
  M.bottomLeftCorner<3, 5>() = Jc;

  Eigen::Matrix<double, 8, 1> rhs;
  rhs.head<5>() = D * qdot_minus;
  rhs.tail<3>() = rest.vec().asDiagonal() * (Jc * qdot_minus);

  const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(M);
  if (!lu.isInvertible()) {
    throw SingularSystem("impact block system is singular");
  }
  const Eigen::Matrix<double, 8, 1> sol = lu.solve(rhs);

  ImpactSolution out;
  out.qdot_plus = sol.head<5>();
  out.f_impulse = sol.tail<3>();
  out.residual = (M * sol - rhs).cwiseAbs().maxCoeff();
  const Eigen::JacobiSVD<Eigen::Matrix<double, 8, 8>> svd(M);
  out.cond = svd.singularValues()(0) / svd.singularValues()(7);
  return out;
}

PlanarVelocities project_to_planar(const Vector5d& qdot_plus, double psi) {
  PlanarVelocities out;
  out.v = qdot_plus[0] * std::cos(psi) + qdot_plus[1] * std::sin(psi);
  out.dot_z = qdot_plus[2];
  out.psi_dot = qdot_plus[3];
  out.dot_varphi_b = qdot_plus[4];
  return out;
}

double impact_kinetic_energy(const Vector5d& qdot, const BikebotParams& p) {
  return 0.5 * qdot.dot(mass_matrix(p) * qdot);
}

}  // namespace bikecross
