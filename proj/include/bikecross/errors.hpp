#pragma once

#include <stdexcept>
#include <string>

namespace bikecross {

// Base class for every error thrown by the library. Catching this is enough
// to turn any internal failure into a Failed verdict at the harness level.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define BIKECROSS_DEFINE_ERROR(Name)                          \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what) : Error(what) {}   \
  }

// Dynamics / kinematics.
BIKECROSS_DEFINE_ERROR(RollSingularity);   // |varphi_b| at or beyond 90 deg
BIKECROSS_DEFINE_ERROR(LowSpeed);          // v below the validity floor
BIKECROSS_DEFINE_ERROR(BalanceLost);       // roll left the recoverable range
BIKECROSS_DEFINE_ERROR(SingularKpsi);      // tracking decoupling matrix singular

// Balance-manifold solver.
BIKECROSS_DEFINE_ERROR(NoRoot);            // no equilibrium root in the bracket
BIKECROSS_DEFINE_ERROR(HSingular);         // control-effectiveness h(varphi_b) ~ 0

// Leg kinematics.
BIKECROSS_DEFINE_ERROR(JointLimit);        // commanded joint outside its range
BIKECROSS_DEFINE_ERROR(Unreachable);       // IK target outside the workspace
BIKECROSS_DEFINE_ERROR(SingularPose);      // force map through a singular jacobian
BIKECROSS_DEFINE_ERROR(TorqueLimit);       // joint torque above the actuator cap
BIKECROSS_DEFINE_ERROR(ForceLimit);        // contact force above the structural cap

// Impact model.
BIKECROSS_DEFINE_ERROR(BadHeight);         // obstacle height outside (0, R_w)
BIKECROSS_DEFINE_ERROR(SingularSystem);    // impact KKT system not invertible

// Impulse planning.
BIKECROSS_DEFINE_ERROR(ZeroRate);          // sign rule undefined at zero roll rate
BIKECROSS_DEFINE_ERROR(Infeasible);        // no candidate satisfies the constraints

// Scenario / IO.
BIKECROSS_DEFINE_ERROR(ParseError);        // malformed scenario / model file
BIKECROSS_DEFINE_ERROR(ValidationError);   // well-formed but inconsistent input
BIKECROSS_DEFINE_ERROR(IoError);           // filesystem failure
BIKECROSS_DEFINE_ERROR(IncompleteWindow);  // observation window not yet filled

#undef BIKECROSS_DEFINE_ERROR

}  // namespace bikecross
