#include "bikecross/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bikecross/errors.hpp"

namespace bikecross {

ReferenceTrajectory ReferenceTrajectory::line(const Eigen::Vector2d& start,
                                              double heading, double speed) {
  if (!(speed > 0) || !std::isfinite(speed) || !std::isfinite(heading) ||
      !start.allFinite()) {
    throw ValidationError("line reference requires finite start/heading and speed > 0");
  }
  ReferenceTrajectory r;
  r.kind_ = Kind::Line;
  r.p0_ = start;
  r.dir_ = Eigen::Vector2d(std::cos(heading), std::sin(heading));
  r.speed_ = speed;
  r.nominal_speed_ = speed;
  return r;
}

ReferenceTrajectory ReferenceTrajectory::arc(const Eigen::Vector2d& center,
                                             double radius, double theta0,
                                             double speed, bool ccw) {
  if (!(radius > 0) || !(speed > 0) || !std::isfinite(theta0) ||
      !center.allFinite()) {
    throw ValidationError("arc reference requires radius > 0 and speed > 0");
  }
  ReferenceTrajectory r;
  r.kind_ = Kind::Arc;
  r.center_ = center;
  r.radius_ = radius;
  r.theta0_ = theta0;
  r.speed_ = speed;
  r.omega_ = (ccw ? 1.0 : -1.0) * speed / radius;
  r.nominal_speed_ = speed;
  return r;
}

ReferenceTrajectory ReferenceTrajectory::spline(
    const std::vector<double>& times, const std::vector<Eigen::Vector2d>& points) {
  const std::size_t n = times.size();
  if (n < 3 || points.size() != n) {
    throw ValidationError("spline reference needs >= 3 timed waypoints");
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(times[i + 1] > times[i])) {
      throw ValidationError("spline waypoint times must be strictly increasing");
    }
  }
  ReferenceTrajectory r;
  r.kind_ = Kind::Spline;
  r.knot_t_ = times;
  r.knot_p_ = points;

  // Natural cubic spline second derivatives: tridiagonal solve per axis.
  r.knot_m_.assign(n, Eigen::Vector2d::Zero());
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = times[i + 1] - times[i];
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> a(n, 0), b(n, 1), c(n, 0), d(n, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      a[i] = h[i - 1];
      b[i] = 2.0 * (h[i - 1] + h[i]);
      c[i] = h[i];
      d[i] = 6.0 * ((points[i + 1][axis] - points[i][axis]) / h[i] -
                    (points[i][axis] - points[i - 1][axis]) / h[i - 1]);
    }
    // Thomas algorithm (natural ends: m0 = mN = 0 already encoded).
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    std::vector<double> m(n, 0);
    m[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
    for (std::size_t i = 0; i < n; ++i) r.knot_m_[i][axis] = m[i];
  }

  // Densified arc length table for projections and the average speed.
  r.knot_s_.assign(n, 0.0);
  double total = 0.0;
  Eigen::Vector2d prev = points[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    constexpr int kSub = 64;
    for (int k = 1; k <= kSub; ++k) {
      const double t = times[i] + h[i] * k / kSub;
      const Eigen::Vector2d p = r.eval_spline(t).r;
      total += (p - prev).norm();
      prev = p;
    }
    r.knot_s_[i + 1] = total;
  }
  r.nominal_speed_ = total / (times.back() - times.front());
  return r;
}

RefPoint ReferenceTrajectory::eval(double t) const {
  if (!std::isfinite(t)) throw ValidationError("reference eval at non-finite time");
  RefPoint out;
  switch (kind_) {
    case Kind::Line: {
      out.r = p0_ + dir_ * (speed_ * t);
      out.rd = dir_ * speed_;
      out.rdd.setZero();
      out.rddd.setZero();
      return out;
    }
    case Kind::Arc: {
      const double th = theta0_ + omega_ * t;
      const Eigen::Vector2d u(std::cos(th), std::sin(th));
      const Eigen::Vector2d up(-std::sin(th), std::cos(th));
      out.r = center_ + radius_ * u;
      out.rd = radius_ * omega_ * up;
      out.rdd = -radius_ * omega_ * omega_ * u;
      out.rddd = -radius_ * omega_ * omega_ * omega_ * up;
      return out;
    }
    case Kind::Spline:
      return eval_spline(t);
  }
  throw ValidationError("unreachable reference kind");
}

RefPoint ReferenceTrajectory::eval_spline(double t) const {
  // Clamp to the knot range; ends continue with the respective end cubic.
  const std::size_t n = knot_t_.size();
  std::size_t i = 0;
  if (t >= knot_t_.back()) {
    i = n - 2;
  } else if (t > knot_t_.front()) {
    i = static_cast<std::size_t>(
        std::upper_bound(knot_t_.begin(), knot_t_.end(), t) - knot_t_.begin() - 1);
  }
  const double h = knot_t_[i + 1] - knot_t_[i];
  const double a = (knot_t_[i + 1] - t) / h;
  const double b = (t - knot_t_[i]) / h;
  RefPoint out;
  const Eigen::Vector2d p0 = knot_p_[i], p1 = knot_p_[i + 1];
  const Eigen::Vector2d m0 = knot_m_[i], m1 = knot_m_[i + 1];
  out.r = a * p0 + b * p1 +
          ((a * a * a - a) * m0 + (b * b * b - b) * m1) * (h * h) / 6.0;
  out.rd = (p1 - p0) / h - (3.0 * a * a - 1.0) * h / 6.0 * m0 +
           (3.0 * b * b - 1.0) * h / 6.0 * m1;
  out.rdd = a * m0 + b * m1;
  out.rddd = (m1 - m0) / h;
  return out;
}

double ReferenceTrajectory::arclength_of(const Eigen::Vector2d& world) const {
  switch (kind_) {
    case Kind::Line:
      return dir_.dot(world - p0_);
    case Kind::Arc: {
      const Eigen::Vector2d d = world - center_;
      if (d.norm() < 1e-12) return 0.0;
      double dth = std::atan2(d.y(), d.x()) - theta0_;
      const double sgn = omega_ >= 0 ? 1.0 : -1.0;
      dth *= sgn;
      while (dth < -M_PI) dth += 2.0 * M_PI;
      while (dth > M_PI) dth -= 2.0 * M_PI;
      return radius_ * dth;
    }
    case Kind::Spline: {
      // Nearest point on the densified polyline.
      double best_d2 = std::numeric_limits<double>::infinity();
      double best_s = 0.0;
      constexpr int kSub = 64;
      for (std::size_t i = 0; i + 1 < knot_t_.size(); ++i) {
        const double h = knot_t_[i + 1] - knot_t_[i];
        Eigen::Vector2d prev = eval_spline(knot_t_[i]).r;
        double s = knot_s_[i];
        for (int k = 1; k <= kSub; ++k) {
          const double t = knot_t_[i] + h * k / kSub;
          const Eigen::Vector2d p = eval_spline(t).r;
          const Eigen::Vector2d seg = p - prev;
          const double len = seg.norm();
          if (len > 1e-12) {
            const double u =
                std::clamp(seg.dot(world - prev) / (len * len), 0.0, 1.0);
            const Eigen::Vector2d proj = prev + u * seg;
            const double d2 = (world - proj).squaredNorm();
            if (d2 < best_d2) {
              best_d2 = d2;
              best_s = s + u * len;
            }
          }
          s += len;
          prev = p;
        }
      }
      return best_s;
    }
  }
  throw ValidationError("unreachable reference kind");
}

Eigen::Vector2d ReferenceTrajectory::point_at_arclength(double s) const {
  if (!std::isfinite(s))
    throw ValidationError("point_at_arclength at non-finite arc length");
  switch (kind_) {
    case Kind::Line:
      return p0_ + dir_ * s;
    case Kind::Arc: {
      const double sgn = omega_ >= 0 ? 1.0 : -1.0;
      const double th = theta0_ + sgn * s / radius_;
      return center_ + radius_ * Eigen::Vector2d(std::cos(th), std::sin(th));
    }
    case Kind::Spline: {
      if (s <= 0.0) return knot_p_.front();
      if (s >= knot_s_.back()) return knot_p_.back();
      constexpr int kSub = 64;
      for (std::size_t i = 0; i + 1 < knot_t_.size(); ++i) {
        if (s > knot_s_[i + 1]) continue;
        const double h = knot_t_[i + 1] - knot_t_[i];
        Eigen::Vector2d prev = eval_spline(knot_t_[i]).r;
        double acc = knot_s_[i];
        for (int k = 1; k <= kSub; ++k) {
          const double t = knot_t_[i] + h * k / kSub;
          const Eigen::Vector2d p = eval_spline(t).r;
          const double len = (p - prev).norm();
          if (acc + len >= s) {
            const double u = len > 1e-12 ? (s - acc) / len : 0.0;
            return prev + u * (p - prev);
          }
          acc += len;
          prev = p;
        }
      }
      return knot_p_.back();
    }
  }
  throw ValidationError("unreachable reference kind");
}

}  // namespace bikecross
