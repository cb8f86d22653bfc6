#include <gtest/gtest.h>

#include <algorithm>

#include "h2rbox/geometry.hpp"
#include "h2rbox/random.hpp"

using namespace h2rbox;

namespace {

RBox random_rbox(Rng& rng) {
  return {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(1, 30), rng.uniform(1, 30),
          rng.uniform(-kPi / 2, kPi / 2)};
}

bool same_point_set(const Polygon& a, const Polygon& b, double tol) {
  if (a.vertices.size() != b.vertices.size()) return false;
  return std::all_of(a.vertices.begin(), a.vertices.end(), [&](Point p) {
    return std::any_of(b.vertices.begin(), b.vertices.end(),
                       [&](Point q) { return distance(p, q) < tol; });
  });
}

}  // namespace

TEST(RotatePoint, CenterIsFixed) {
  const ViewRotation v(0.7, {3.5, -2.0});
  EXPECT_EQ(rotate_point({3.5, -2.0}, v), (Point{3.5, -2.0}));
}

TEST(RotatePoint, QuarterTurn) {
  const Point p = rotate_point({1, 0}, ViewRotation(kPi / 2, {0, 0}));
  EXPECT_NEAR(p.x, 0.0, 1e-15);
  EXPECT_NEAR(p.y, 1.0, 1e-15);
}

TEST(RotatePoint, ThirtyDegreesAboutOffsetCenter) {
  const Point p = rotate_point({3, 1}, ViewRotation(deg_to_rad(30), {1, 1}));
  EXPECT_NEAR(p.x, 2.7320508075688776, 1e-12);
  EXPECT_NEAR(p.y, 2.0, 1e-12);
}

TEST(RotatePoint, RoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Point p{rng.uniform(-100, 100), rng.uniform(-100, 100)};
    const ViewRotation v(rng.uniform(-kPi, kPi), {rng.uniform(-10, 10), rng.uniform(-10, 10)});
    const Point q = rotate_point(rotate_point(p, v), v.inverse());
    EXPECT_NEAR(q.x, p.x, 1e-12);
    EXPECT_NEAR(q.y, p.y, 1e-12);
  }
}

TEST(ViewRotation, MatrixIsOrthonormal) {
  const auto m = ViewRotation(1.234, {0, 0}).matrix();
  EXPECT_NEAR(m[0] * m[0] + m[2] * m[2], 1.0, 1e-15);
  EXPECT_NEAR(m[0] * m[1] + m[2] * m[3], 0.0, 1e-15);
  EXPECT_NEAR(m[0] * m[3] - m[1] * m[2], 1.0, 1e-15);
}

TEST(RotateRBox, ZeroIsIdentity) {
  const RBox b{1, 2, 3, 4, 0.3};
  const RBox r = rotate_rbox(b, ViewRotation(0.0, {5, 5}));
  EXPECT_DOUBLE_EQ(r.cx, b.cx);
  EXPECT_DOUBLE_EQ(r.cy, b.cy);
  EXPECT_DOUBLE_EQ(r.theta, b.theta);
}

TEST(RotateRBox, QuarterTurnNormalizes) {
  const RBox r = rotate_rbox({0, 0, 4, 2, 0}, ViewRotation(kPi / 2, {0, 0}));
  EXPECT_DOUBLE_EQ(r.w, 4);
  EXPECT_DOUBLE_EQ(r.h, 2);
  EXPECT_NEAR(r.theta, -kPi / 2, 1e-15);
}

TEST(RotateRBox, CenterAndAngleCompose) {
  const RBox r = rotate_rbox({2, 0, 4, 2, deg_to_rad(10)}, ViewRotation(deg_to_rad(20), {0, 0}));
  EXPECT_NEAR(r.cx, 1.8793852415718169, 1e-12);
  EXPECT_NEAR(r.cy, 0.6840402866513374, 1e-12);
  EXPECT_NEAR(r.theta, deg_to_rad(30), 1e-12);
}

TEST(CircumscribedHBox, Examples) {
  const HBox a = circumscribed_hbox({0, 0, 4, 2, 0});
  EXPECT_DOUBLE_EQ(a.w, 4);
  EXPECT_DOUBLE_EQ(a.h, 2);
  const HBox b = circumscribed_hbox({0, 0, 3, 3, kPi / 4});
  EXPECT_NEAR(b.w, 3 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(b.h, 3 * std::sqrt(2.0), 1e-12);
  const HBox c = circumscribed_hbox({0, 0, 4, 2, deg_to_rad(30)});
  EXPECT_NEAR(c.w, 4.464101615137754, 1e-12);
  EXPECT_NEAR(c.h, 3.732050807568877, 1e-12);
}

TEST(CircumscribedHBox, RotationAboutOwnCenter) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const RBox b = random_rbox(rng);
    const double dt = rng.uniform(-kPi, kPi);
    const HBox h = circumscribed_hbox(rotate_rbox(b, ViewRotation(dt, b.center())));
    const double t = b.theta + dt;
    EXPECT_NEAR(h.w, b.w * std::abs(std::cos(t)) + b.h * std::abs(std::sin(t)), 1e-12);
    EXPECT_NEAR(h.h, b.w * std::abs(std::sin(t)) + b.h * std::abs(std::cos(t)), 1e-12);
  }
}

TEST(SymmetricRBox, Examples) {
  EXPECT_DOUBLE_EQ(symmetric_rbox({0, 0, 4, 2, 0}).theta, 0.0);
  EXPECT_NEAR(symmetric_rbox({0, 0, 4, 2, deg_to_rad(30)}).theta, deg_to_rad(-30), 1e-12);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const RBox b = random_rbox(rng);
    const RBox twice = symmetric_rbox(symmetric_rbox(b));
    EXPECT_NEAR(rbox_iou(twice, b), 1.0, 1e-9);
  }
}

TEST(SymmetricRBox, SharesTheCircumscribedRectangle) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const RBox b = random_rbox(rng);
    const HBox x = circumscribed_hbox(b);
    const HBox y = circumscribed_hbox(symmetric_rbox(b));
    EXPECT_NEAR(x.w, y.w, 1e-12);
    EXPECT_NEAR(x.h, y.h, 1e-12);
  }
}

TEST(TransformationRelations, FourRelationsHold) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    RBox ws_c = random_rbox(rng);
    ws_c.w = ws_c.h * rng.uniform(1.2, 3.0);
    double dt = rng.uniform(0.2, 1.3);
    if (rng.bernoulli(0.5)) dt = -dt;
    const ViewRotation v(dt, {rng.uniform(-5, 5), rng.uniform(-5, 5)});
    const RBox ss_c = rotate_rbox(ws_c, v);
    const RBox ws_s = symmetric_rbox(ws_c);
    const RBox ss_s = symmetric_rbox(ss_c);

    EXPECT_NEAR(rbox_iou(rotate_rbox(ws_c, v), ss_c), 1.0, 1e-9);
    EXPECT_NEAR(rbox_iou(rotate_rbox(ss_c, v.inverse()), ws_c), 1.0, 1e-9);
    EXPECT_NEAR(rbox_iou(symmetric_rbox(rotate_rbox(ws_c, v)), ss_s), 1.0, 1e-9);
    EXPECT_NEAR(rbox_iou(symmetric_rbox(rotate_rbox(ss_c, v.inverse())), ws_s), 1.0, 1e-9);

    // Between the mirror images the center follows R but the angle turns the
    // other way, so R does not carry one onto the other.
    const Point c = rotate_point(ws_s.center(), v);
    EXPECT_NEAR(c.x, ss_s.cx, 1e-9);
    EXPECT_NEAR(c.y, ss_s.cy, 1e-9);
    EXPECT_NEAR(std::sin(ss_s.theta - (ws_s.theta - dt)), 0.0, 1e-9);
    EXPECT_LT(rbox_iou(rotate_rbox(ws_s, v), ss_s), 1.0 - 1e-6);
  }
}

TEST(RBoxCorners, AxisAlignedSquare) {
  const Polygon p = rbox_corners({0, 0, 2, 2, 0});
  const Polygon want{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};
  EXPECT_TRUE(same_point_set(p, want, 1e-15));
  EXPECT_GT(p.signed_area(), 0.0);
}

TEST(RBoxCorners, RotatedOffsets) {
  const Polygon p = rbox_corners({1, 1, 4, 2, deg_to_rad(30)});
  const Polygon want{{{-0.23205080756887747, -0.8660254037844386},
                      {3.2320508075688776, 1.1339745962155612},
                      {2.2320508075688776, 2.866025403784439},
                      {-1.2320508075688774, 0.8660254037844388}}};
  EXPECT_TRUE(same_point_set(p, want, 1e-12));
  const Point c = p.centroid();
  EXPECT_NEAR(c.x, 1.0, 1e-12);
  EXPECT_NEAR(c.y, 1.0, 1e-12);
}

TEST(RBoxCorners, InsideCircumscribedHBox) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const RBox b{0, 0, 4, 2, rng.uniform(-kPi / 2, kPi / 2)};
    const HBox h = circumscribed_hbox(b);
    for (Point p : rbox_corners(b).vertices) {
      EXPECT_LE(p.x, h.x2() + 1e-12);
      EXPECT_GE(p.x, h.x1() - 1e-12);
      EXPECT_LE(p.y, h.y2() + 1e-12);
      EXPECT_GE(p.y, h.y1() - 1e-12);
    }
  }
}

TEST(HBoxIou, Examples) {
  EXPECT_DOUBLE_EQ(hbox_iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(hbox_iou({0, 0, 2, 2}, {10, 0, 2, 2}), 0.0);
  EXPECT_NEAR(hbox_iou({0, 0, 2, 2}, {1, 0, 2, 2}), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(hbox_iou({0, 0, 2, 2}, {1, 0, 2, 2}), hbox_iou({1, 0, 2, 2}, {0, 0, 2, 2}));
}

TEST(RBoxIou, Examples) {
  EXPECT_NEAR(rbox_iou({3, 4, 5, 2, 0.7}, {3, 4, 5, 2, 0.7}), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(rbox_iou({0, 0, 2, 2, 0.1}, {100, 0, 2, 2, 0.3}), 0.0);
  // 1/sqrt2 by polygon clipping in an independent implementation.
  EXPECT_NEAR(rbox_iou({0, 0, 2, 2, 0}, {0, 0, 2, 2, kPi / 4}), 0.7071067811865476, 1e-12);
}

TEST(RBoxIou, MatchesHBoxIouWhenAxisAligned) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const HBox a{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(1, 8), rng.uniform(1, 8)};
    const HBox b{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(1, 8), rng.uniform(1, 8)};
    EXPECT_NEAR(rbox_iou(hbox_as_rbox(a), hbox_as_rbox(b)), hbox_iou(a, b), 1e-12);
  }
}

TEST(RBoxIou, SymmetricAndBounded) {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    RBox a = random_rbox(rng);
    RBox b = random_rbox(rng);
    b.cx = a.cx + rng.uniform(-10, 10);
    b.cy = a.cy + rng.uniform(-10, 10);
    const double x = rbox_iou(a, b);
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    EXPECT_NEAR(x, rbox_iou(b, a), 1e-12);
  }
}

TEST(Representation, SwapIsTheSameRectangle) {
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const RBox b = random_rbox(rng);
    const RBox s = swap_representation(b);
    EXPECT_NEAR(s.w, b.h, 0);
    EXPECT_GE(s.theta, -kPi / 2);
    EXPECT_LT(s.theta, kPi / 2);
    const HBox x = circumscribed_hbox(b);
    const HBox y = circumscribed_hbox(s);
    EXPECT_NEAR(x.w, y.w, 1e-12);
    EXPECT_NEAR(x.h, y.h, 1e-12);
    EXPECT_TRUE(same_point_set(rbox_corners(b), rbox_corners(s), 1e-9));
    const RBox other = random_rbox(rng);
    EXPECT_NEAR(rbox_iou(b, other), rbox_iou(s, other), 1e-9);
    EXPECT_GE(canonical_rbox(b).w, canonical_rbox(b).h);
  }
}

TEST(AngleNormalize, Examples) {
  EXPECT_DOUBLE_EQ(angle_normalize(kPi / 2), -kPi / 2);
  EXPECT_DOUBLE_EQ(angle_normalize(0.0), 0.0);
  EXPECT_NEAR(angle_normalize(deg_to_rad(200)), deg_to_rad(20), 1e-12);
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(-20, 20);
    const double n = angle_normalize(t);
    EXPECT_GE(n, -kPi / 2);
    EXPECT_LT(n, kPi / 2);
    const double k = (t - n) / kPi;
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
}

TEST(ClipConvex, DisjointIsEmpty) {
  const Polygon a = rbox_corners({0, 0, 1, 1, 0});
  const Polygon b = rbox_corners({5, 5, 1, 1, 0.2});
  EXPECT_LE(clip_convex(a, b).area(), kDegenerateArea);
}
