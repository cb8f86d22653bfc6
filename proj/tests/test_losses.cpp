#include <gtest/gtest.h>

#include <cmath>

#include "h2rbox/losses.hpp"
#include "h2rbox/oracles.hpp"
#include "h2rbox/random.hpp"

using namespace h2rbox;

TEST(Focal, Examples) {
  EXPECT_NEAR(focal_loss(0.5, true), 0.04332169878499658, 1e-15);
  EXPECT_NEAR(focal_loss(0.5, false), 3 * 0.04332169878499658, 1e-15);
  EXPECT_LT(focal_loss(0.99, true), focal_loss(0.6, true));
  EXPECT_TRUE(std::isfinite(focal_loss(0.0, true)));
  EXPECT_TRUE(std::isfinite(focal_loss(1.0, false)));
}

TEST(Centerness, Examples) {
  EXPECT_NEAR(centerness_loss(0.5, 1.0), 0.6931471805599453, 1e-15);
  EXPECT_NEAR(centerness_loss(0.5, 0.5), 0.6931471805599453, 1e-15);
  EXPECT_LT(centerness_loss(0.8, 0.8), centerness_loss(0.5, 0.8));
}

TEST(IouReg, Examples) {
  EXPECT_NEAR(iou_reg_loss({0, 0, 2, 2}, {1, 0, 2, 2}), 1.0986122886681098, 1e-14);
  EXPECT_NEAR(iou_reg_loss({0, 0, 2, 2}, {1, 0, 2, 2}, IouLossKind::kOneMinus), 2.0 / 3.0,
              1e-14);
  EXPECT_DOUBLE_EQ(iou_reg_loss({3, 4, 5, 6}, {3, 4, 5, 6}), 0.0);
  const double far = iou_reg_loss({0, 0, 1, 1}, {10, 10, 1, 1});
  EXPECT_TRUE(std::isfinite(far));
  EXPECT_NEAR(far, -std::log(kIouFloor), 1e-12);
}

TEST(LWhTheta, Examples) {
  EXPECT_NEAR(l_wh_theta({0, 0, 4, 2, deg_to_rad(30)}, {0, 0, 4, 2, deg_to_rad(10)}),
              0.3420201433256687, 1e-14);
  EXPECT_NEAR(l_wh_theta({0, 0, 4, 2, deg_to_rad(30)}, {0, 0, 2, 4, deg_to_rad(-60)}), 0.0,
              1e-14);
  EXPECT_NEAR(l_wh_theta({0, 0, 4, 2, 0.3}, {1, 2, 3, 2.5, 0.1}), 0.6582016601735015, 1e-14);
  EXPECT_NEAR(ss_reg_loss({0, 0, 4, 2, 0.3}, {1, 2, 3, 2.5, 0.1}, {}), 1.1082016601735014,
              1e-14);
}

TEST(LXy, Examples) {
  EXPECT_DOUBLE_EQ(l_xy({1, 2, 3, 3, 0}, {4, -2, 1, 1, 1}), 7.0);
}

TEST(LWhTheta, ExchangeEquality) {
  Rng rng(21);
  for (int i = 0; i < 5000; ++i) {
    const RBox t{0, 0, rng.uniform(1, 50), rng.uniform(1, 50), rng.uniform(-1.6, 1.6)};
    const RBox p{0, 0, rng.uniform(1, 50), rng.uniform(1, 50), rng.uniform(-1.6, 1.6)};
    const RBox q{0, 0, p.h, p.w, p.theta + kPi / 2};
    EXPECT_NEAR(l_wh_theta(t, p), l_wh_theta(t, q), 1e-9);
  }
}

TEST(LWhTheta, PeriodicInTheAngle) {
  Rng rng(22);
  for (int i = 0; i < 2000; ++i) {
    const RBox t{0, 0, rng.uniform(1, 50), rng.uniform(1, 50), rng.uniform(-1.6, 1.6)};
    RBox p{0, 0, rng.uniform(1, 50), rng.uniform(1, 50), rng.uniform(-1.6, 1.6)};
    const double base = l_wh_theta(t, p);
    p.theta += kPi;
    EXPECT_NEAR(l_wh_theta(t, p), base, 1e-9);
  }
}

TEST(LWhTheta, ContinuousAcrossTheWrap) {
  const RBox t{0, 0, 4, 2, kPi / 2 - 1e-3};
  const RBox below{0, 0, 4, 2, -kPi / 2 + 1e-3};
  const RBox at{0, 0, 4, 2, -kPi / 2};
  EXPECT_LT(l_wh_theta(t, below), 3e-3);
  EXPECT_LT(l_wh_theta(t, at), 2e-3);
}

TEST(WsLoss, HandComputed) {
  std::vector<Prediction> preds(4);
  std::vector<Target> targets(4);
  preds[0] = {{10, 10}, {10, 10, 4, 2, 0}, {0.7, 0.2}, 0.6};
  targets[0] = {{10, 10}, 1, 0.8, {10, 10, 4, 3}, std::nullopt, true, 0};
  preds[1] = {{20, 20}, {20, 20, 2, 2, 0}, {0.1, 0.4}, 0.3};
  targets[1] = {{20, 20}, 2, 0.5, {21, 20, 2, 2}, std::nullopt, true, 1};
  preds[2] = {{30, 30}, {30, 30, 1, 1, 0}, {0.3, 0.05}, 0.5};
  targets[2] = {{30, 30}, 0, 0.0, {}, std::nullopt, true, -1};
  preds[3] = {{40, 40}, {40, 40, 1, 1, 0}, {0.9, 0.9}, 0.9};
  targets[3] = {{40, 40}, 1, 0.9, {0, 0, 1, 1}, std::nullopt, false, 2};
  const WsLossBreakdown b = ws_loss(preds, targets, {});
  EXPECT_EQ(b.num_positives, 2u);
  EXPECT_NEAR(b.cls, 0.061073798078498255, 1e-12);
  EXPECT_NEAR(b.cn, 0.6861212597599788, 1e-12);
  EXPECT_NEAR(b.reg, 0.6720601775542973, 1e-12);
  EXPECT_NEAR(b.total, 1.4192552353927743, 1e-12);

  LossWeights w;
  w.mu1 = 2;
  w.mu2 = 0;
  w.mu3 = 3;
  const WsLossBreakdown scaled = ws_loss(preds, targets, w);
  EXPECT_NEAR(scaled.total, 2 * b.cls + 3 * b.reg, 1e-12);
}

TEST(WsLoss, NoPositives) {
  std::vector<Prediction> preds{{{0, 0}, {0, 0, 1, 1, 0}, {0.5}, 0.5}};
  std::vector<Target> targets{{{0, 0}, 0, 0.0, {}, std::nullopt, true, -1}};
  const WsLossBreakdown b = ws_loss(preds, targets, {});
  EXPECT_TRUE(b.empty_positives);
  EXPECT_DOUBLE_EQ(b.reg, 0.0);
  EXPECT_DOUBLE_EQ(b.cn, 0.0);
  EXPECT_NEAR(b.cls, 3 * 0.04332169878499658, 1e-15);
}

TEST(SsLoss, CenternessWeightedMean) {
  const RBox t{0, 0, 4, 2, 0.3};
  std::vector<SsPair> pairs(3);
  pairs[0].target = {{0, 0}, 1, 0.75, {}, t, true, 0};
  pairs[0].prediction = {1, 2, 3, 2.5, 0.1};
  pairs[1].target = {{0, 0}, 1, 0.25, {}, t, true, 0};
  pairs[1].prediction = t;
  pairs[2].target = {{0, 0}, 1, 1.0, {}, t, false, 0};
  pairs[2].prediction = {100, 100, 1, 1, 1};
  const SsLossResult r = ss_loss(pairs, {});
  EXPECT_FALSE(r.empty_positives);
  EXPECT_NEAR(r.value, 0.75 * 1.1082016601735014, 1e-12);
  EXPECT_TRUE(ss_loss({}, {}).empty_positives);
}

TEST(TotalLoss, Lambda) {
  EXPECT_NEAR(total_loss(1.0, 1.0, {}), 1.4, 1e-15);
  LossWeights w;
  w.lambda = 0;
  EXPECT_DOUBLE_EQ(total_loss(2.0, 5.0, w), 2.0);
}

namespace {

PairTerms sample_terms(Rng& rng, const RBox& ws) {
  PairTerms terms;
  terms.rotation = ViewRotation(rng.uniform(-3, 3), {rng.uniform(0, 50), rng.uniform(0, 50)});
  terms.view1_hbox = circumscribed_hbox(ws);
  terms.view2_hbox = circumscribed_hbox(rotate_rbox(ws, terms.rotation));
  for (HBox* b : {&terms.view1_hbox, &*terms.view2_hbox}) {
    b->cx += rng.uniform(-2, 2);
    b->cy += rng.uniform(-2, 2);
    b->w *= rng.uniform(0.8, 1.2);
    b->h *= rng.uniform(0.8, 1.2);
  }
  terms.stop_grad_target = rng.bernoulli(0.5);
  return terms;
}

}  // namespace

TEST(PairGradient, MatchesCentralDifferences) {
  Rng rng(23);
  int checked = 0;
  int drawn = 0;
  while (checked < 100) {
    ASSERT_LT(drawn++, 1000);
    const RBox ws{rng.uniform(10, 40), rng.uniform(10, 40), rng.uniform(5, 20),
                  rng.uniform(2, 8), rng.uniform(-1.4, 1.4)};
    const PairTerms terms = sample_terms(rng, ws);
    RBox ss = rotate_rbox(ws, terms.rotation);
    ss.cx += rng.uniform(-1, 1);
    ss.cy += rng.uniform(-1, 1);
    ss.w += rng.uniform(-1, 1);
    ss.h += rng.uniform(-0.5, 0.5);
    ss.theta += rng.uniform(-0.2, 0.2);
    if (kink_distance(ws, ss, terms, {}, 1.0) < 2e-3) continue;
    const PairGradient g = pair_total_loss_gradient(ws, ss, terms, {});
    EXPECT_NEAR(g.value, pair_total_loss(ws, ss, terms, {}), 1e-12);
    for (std::size_t k = 0; k < 10; ++k) {
      auto perturbed = [&](double d) {
        RBox a = ws;
        RBox b = ss;
        RBox src = ws;
        double* field[10] = {&a.cx, &a.cy, &a.w, &a.h, &a.theta,
                             &b.cx, &b.cy, &b.w, &b.h, &b.theta};
        *field[k] += d;
        if (terms.stop_grad_target) {
          return pair_total_loss(kernels::lift<double>(a), kernels::lift<double>(b),
                                 kernels::lift<double>(src), terms, LossWeights{});
        }
        return pair_total_loss(a, b, terms, {});
      };
      const double h = 1e-6;
      const double fd = (perturbed(h) - perturbed(-h)) / (2 * h);
      EXPECT_NEAR(g.grad[k], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "component " << k;
    }
    ++checked;
  }
}

TEST(PairGradient, StopGradientRemovesTheTargetPath) {
  const RBox ws{20, 20, 10, 4, 0.4};
  PairTerms terms;
  terms.rotation = ViewRotation(0.7, {25, 25});
  terms.view1_hbox = circumscribed_hbox(ws);
  RBox ss = rotate_rbox(ws, terms.rotation);
  ss.theta += 0.1;
  terms.stop_grad_target = false;
  const PairGradient through = pair_total_loss_gradient(ws, ss, terms, {});
  terms.stop_grad_target = true;
  const PairGradient stopped = pair_total_loss_gradient(ws, ss, terms, {});
  EXPECT_NEAR(through.value, stopped.value, 1e-15);
  EXPECT_NE(through.grad[4], stopped.grad[4]);
  for (std::size_t k = 5; k < 10; ++k) EXPECT_DOUBLE_EQ(through.grad[k], stopped.grad[k]);
}
