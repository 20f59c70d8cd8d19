#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bikecross {

// Reference sample with analytic derivatives up to third order.
struct RefPoint {
  Eigen::Vector2d r{0, 0};
  Eigen::Vector2d rd{0, 0};    // velocity
  Eigen::Vector2d rdd{0, 0};   // acceleration
  Eigen::Vector2d rddd{0, 0};  // jerk
};

// Planar reference path parameterized by time. Three families: straight
// line at constant speed, circular arc at constant speed, and a natural
// cubic spline through timed waypoints (C2, with piecewise-constant jerk).
class ReferenceTrajectory {
 public:
  static ReferenceTrajectory line(const Eigen::Vector2d& start, double heading,
                                  double speed);
  static ReferenceTrajectory arc(const Eigen::Vector2d& center, double radius,
                                 double theta0, double speed, bool ccw = true);
  static ReferenceTrajectory spline(const std::vector<double>& times,
                                    const std::vector<Eigen::Vector2d>& points);

  RefPoint eval(double t) const;

  // Arc length of the projection of a world point onto the path, measured
  // from the path start. Used to place obstacles and detect crossings.
  double arclength_of(const Eigen::Vector2d& world) const;

  // World point at a given arc length from the path start (clamped to the
  // covered range for splines). Inverse companion of arclength_of.
  Eigen::Vector2d point_at_arclength(double s) const;

  // Nominal forward speed of the path (exact for line/arc, average for
  // splines); region-of-attraction grids are computed at this speed.
  double nominal_speed() const { return nominal_speed_; }

 private:
  enum class Kind { Line, Arc, Spline };
  Kind kind_ = Kind::Line;

  // Line.
  Eigen::Vector2d p0_{0, 0};
  Eigen::Vector2d dir_{1, 0};
  double speed_ = 1.0;

  // Arc.
  Eigen::Vector2d center_{0, 0};
  double radius_ = 1.0;
  double theta0_ = 0.0;
  double omega_ = 0.0;  // signed angular rate

  // Spline (natural cubic, per axis).
  std::vector<double> knot_t_;
  std::vector<Eigen::Vector2d> knot_p_;
  std::vector<Eigen::Vector2d> knot_m_;  // second derivatives at knots
  std::vector<double> knot_s_;           // cumulative arc length (polyline)

  double nominal_speed_ = 1.0;

  RefPoint eval_spline(double t) const;
};

}  // namespace bikecross
