#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace h2rbox {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(Point a, double k) { return {a.x * k, a.y * k}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Rotated box. `w` is the extent along the direction `theta`, `h` the extent
/// perpendicular to it. Angles are radians, canonically in [-pi/2, pi/2).
struct RBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;

  Point center() const { return {cx, cy}; }
  bool valid() const;
  friend bool operator==(const RBox&, const RBox&) = default;
};

/// Axis-aligned box stored as center and size.
struct HBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;

  Point center() const { return {cx, cy}; }
  double x1() const { return cx - 0.5 * w; }
  double y1() const { return cy - 0.5 * h; }
  double x2() const { return cx + 0.5 * w; }
  double y2() const { return cy + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const;

  static HBox from_corners(double x1, double y1, double x2, double y2) {
    return {0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1};
  }
  friend bool operator==(const HBox&, const HBox&) = default;
};

/// Rotation of a whole view by `delta_theta` about `center` (the image center).
class ViewRotation {
 public:
  ViewRotation() = default;
  ViewRotation(double delta_theta, Point center)
      : delta_theta_(delta_theta), center_(center),
        cos_(std::cos(delta_theta)), sin_(std::sin(delta_theta)) {}

  double delta_theta() const { return delta_theta_; }
  Point center() const { return center_; }
  /// Row-major 2x2 rotation matrix R.
  std::array<double, 4> matrix() const { return {cos_, -sin_, sin_, cos_}; }
  ViewRotation inverse() const { return {-delta_theta_, center_}; }

  /// (p - c) R^T + c.
  Point apply(Point p) const {
    if (p == center_) return p;
    const double dx = p.x - center_.x;
    const double dy = p.y - center_.y;
    return {dx * cos_ - dy * sin_ + center_.x, dx * sin_ + dy * cos_ + center_.y};
  }

 private:
  double delta_theta_ = 0.0;
  Point center_{};
  double cos_ = 1.0;
  double sin_ = 0.0;
};

/// Counter-clockwise vertex list.
struct Polygon {
  std::vector<Point> vertices;

  /// Shoelace area (signed positive for CCW input).
  double signed_area() const;
  double area() const { return std::abs(signed_area()); }
  Point centroid() const;
};

/// Maps any finite angle into [-pi/2, pi/2), congruent mod pi.
double angle_normalize(double theta);

Point rotate_point(Point p, const ViewRotation& v);
RBox rotate_rbox(const RBox& b, const ViewRotation& v);
HBox circumscribed_hbox(const RBox& b);
/// Mirror image about the box center: angle pi - theta.
RBox symmetric_rbox(const RBox& b);
/// The same rectangle described with edges exchanged: (h, w, theta + pi/2).
RBox swap_representation(const RBox& b);
/// Representation with w >= h.
RBox canonical_rbox(const RBox& b);
RBox hbox_as_rbox(const HBox& b);

Polygon rbox_corners(const RBox& b);

/// Clips a convex subject polygon by every half-plane of a convex CCW clip
/// polygon.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

double hbox_iou(const HBox& a, const HBox& b);
double rbox_iou(const RBox& a, const RBox& b);

/// Intersection areas below this are reported as an empty intersection.
inline constexpr double kDegenerateArea = 1e-12;

}  // namespace h2rbox
