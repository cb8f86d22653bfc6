#include "h2rbox/geometry.hpp"

#include <algorithm>

namespace h2rbox {

bool RBox::valid() const {
  return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
         std::isfinite(theta) && w > 0.0 && h > 0.0;
}

bool HBox::valid() const {
  return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
         w > 0.0 && h > 0.0;
}

double Polygon::signed_area() const {
  const std::size_t n = vertices.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross(vertices[i], vertices[(i + 1) % n]);
  }
  return 0.5 * acc;
}

Point Polygon::centroid() const {
  Point c{};
  if (vertices.empty()) return c;
  for (const Point& p : vertices) c = c + p;
  return c * (1.0 / static_cast<double>(vertices.size()));
}

double angle_normalize(double theta) {
  double r = std::fmod(theta + 0.5 * kPi, kPi);
  if (r < 0.0) r += kPi;
  // fmod can return exactly pi after the correction for tiny negative inputs.
  if (r >= kPi) r -= kPi;
  return r - 0.5 * kPi;
}

Point rotate_point(Point p, const ViewRotation& v) { return v.apply(p); }

RBox rotate_rbox(const RBox& b, const ViewRotation& v) {
  const Point c = v.apply(b.center());
  return {c.x, c.y, b.w, b.h, angle_normalize(b.theta + v.delta_theta())};
}

HBox circumscribed_hbox(const RBox& b) {
  const double c = std::abs(std::cos(b.theta));
  const double s = std::abs(std::sin(b.theta));
  return {b.cx, b.cy, b.w * c + b.h * s, b.w * s + b.h * c};
}

RBox symmetric_rbox(const RBox& b) {
  return {b.cx, b.cy, b.w, b.h, angle_normalize(kPi - b.theta)};
}

RBox swap_representation(const RBox& b) {
  return {b.cx, b.cy, b.h, b.w, angle_normalize(b.theta + 0.5 * kPi)};
}

RBox canonical_rbox(const RBox& b) {
  if (b.w >= b.h) return {b.cx, b.cy, b.w, b.h, angle_normalize(b.theta)};
  return swap_representation(b);
}

RBox hbox_as_rbox(const HBox& b) { return {b.cx, b.cy, b.w, b.h, 0.0}; }

Polygon rbox_corners(const RBox& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const Point u{0.5 * b.w * c, 0.5 * b.w * s};
  const Point v{-0.5 * b.h * s, 0.5 * b.h * c};
  const Point o = b.center();
  return Polygon{{o - u - v, o + u - v, o + u + v, o - u + v}};
}

namespace {

Point line_intersection(Point p, Point q, Point a, Point b) {
  const Point r = q - p;
  const Point e = b - a;
  const double denom = cross(r, e);
  if (denom == 0.0) return p;
  const double t = cross(a - p, e) / denom;
  return p + r * t;
}

}  // namespace

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  std::vector<Point> out = subject.vertices;
  const std::size_t m = clip.vertices.size();
  for (std::size_t i = 0; i < m && !out.empty(); ++i) {
    const Point a = clip.vertices[i];
    const Point b = clip.vertices[(i + 1) % m];
    const Point edge = b - a;
    std::vector<Point> in = std::move(out);
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t j = 0; j < n; ++j) {
      const Point cur = in[j];
      const Point prev = in[(j + n - 1) % n];
      const bool cur_in = cross(edge, cur - a) >= 0.0;
      const bool prev_in = cross(edge, prev - a) >= 0.0;
      if (cur_in) {
        if (!prev_in) out.push_back(line_intersection(prev, cur, a, b));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return Polygon{std::move(out)};
}

double hbox_iou(const HBox& a, const HBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

double rbox_iou(const RBox& a, const RBox& b) {
  const double area_a = a.w * a.h;
  const double area_b = b.w * b.h;
  // Quick reject on circumscribed circles.
  const double ra = 0.5 * std::hypot(a.w, a.h);
  const double rb = 0.5 * std::hypot(b.w, b.h);
  if (distance(a.center(), b.center()) >= ra + rb) return 0.0;

  const double inter = clip_convex(rbox_corners(a), rbox_corners(b)).area();
  if (inter < kDegenerateArea) return 0.0;
  return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

}  // namespace h2rbox
