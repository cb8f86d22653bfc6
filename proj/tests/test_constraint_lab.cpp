#include <gtest/gtest.h>

#include "h2rbox/constraint_lab.hpp"
#include "h2rbox/random.hpp"

using namespace h2rbox;

namespace {

double gap_deg(double a, double b) {
  const double d = std::abs(angle_normalize(a - b));
  return rad_to_deg(std::min(d, kPi - d));
}

}  // namespace

TEST(CircumscribedDims, Examples) {
  const Dims a = circumscribed_dims(4, 2, 0);
  EXPECT_DOUBLE_EQ(a.w, 4);
  EXPECT_DOUBLE_EQ(a.h, 2);
  const Dims b = circumscribed_dims(4, 2, deg_to_rad(30));
  EXPECT_NEAR(b.w, 4.464101615137754, 1e-12);
  EXPECT_NEAR(b.h, 3.732050807568877, 1e-12);
  for (double t : {0.1, 0.7, -1.2}) {
    const Dims s = circumscribed_dims(3, 3, t);
    EXPECT_NEAR(s.w, s.h, 1e-12);
  }
}

TEST(SolveWh, Examples) {
  const WhSolution a = solve_wh_given_theta(4.464101615137754, 3.732050807568877, deg_to_rad(30));
  ASSERT_EQ(a.status, SolveStatus::kOk);
  EXPECT_NEAR(a.w, 4, 1e-12);
  EXPECT_NEAR(a.h, 2, 1e-12);
  const WhSolution b = solve_wh_given_theta(4, 2, 0);
  EXPECT_DOUBLE_EQ(b.w, 4);
  EXPECT_DOUBLE_EQ(b.h, 2);
  EXPECT_EQ(solve_wh_given_theta(4, 2, kPi / 4).status, SolveStatus::kSingular);
  EXPECT_EQ(solve_wh_given_theta(1, 10, deg_to_rad(10)).status, SolveStatus::kInfeasible);
}

TEST(SolveWh, RoundTrip) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double w = rng.uniform(1, 100);
    const double h = rng.uniform(1, 100);
    double t = rng.uniform(-kPi / 2, kPi / 2);
    if (std::abs(std::abs(t) - kPi / 4) < 0.02) continue;
    const Dims d = circumscribed_dims(w, h, t);
    const WhSolution s = solve_wh_given_theta(d.w, d.h, t);
    ASSERT_EQ(s.status, SolveStatus::kOk);
    EXPECT_NEAR(s.w, w, 1e-9 * w);
    EXPECT_NEAR(s.h, h, 1e-9 * h);
  }
}

TEST(ConstraintSet, Parse) {
  EXPECT_EQ(ConstraintSet::parse("HCRC+SC"), (ConstraintSet{true, false}));
  EXPECT_EQ(ConstraintSet::parse("hcrc+sc+ac")->name(), "hcrc+sc+ac");
  EXPECT_FALSE(ConstraintSet::parse("sc"));
}

TEST(EnumerateFeasible, ThreeRegimes) {
  const auto p = ConstraintProblem::from_ground_truth(4, 2, deg_to_rad(30), deg_to_rad(25));
  EnumerateOptions coarse;
  coarse.grid_step = deg_to_rad(0.5);
  const SolutionSet hcrc = enumerate_feasible(p, {false, false}, coarse);
  EXPECT_EQ(hcrc.classification, Classification::kInfiniteFamily);
  EXPECT_GE(hcrc.grid_feasible, 50u);

  const SolutionSet sc = enumerate_feasible(p, {true, false});
  ASSERT_EQ(sc.classification, Classification::kTwoFold);
  EXPECT_LT(gap_deg(sc.solutions[0].theta, deg_to_rad(-30)), 0.5);
  EXPECT_LT(gap_deg(sc.solutions[1].theta, deg_to_rad(30)), 0.5);
  for (const Candidate& c : sc.solutions) {
    EXPECT_NEAR(c.w, 4, 1e-3);
    EXPECT_NEAR(c.h, 2, 1e-3);
    EXPECT_LE(c.residual, sc.tolerance);
  }

  const SolutionSet ac = enumerate_feasible(p, {true, true});
  ASSERT_EQ(ac.classification, Classification::kUnique);
  EXPECT_LT(gap_deg(ac.solutions[0].theta, deg_to_rad(30)), 0.5);
  EXPECT_EQ(ac.skipped.size(), 2u);
}

TEST(EnumerateFeasible, SquareIsDegenerateEverywhere) {
  const auto p = ConstraintProblem::from_ground_truth(3, 3, deg_to_rad(20), deg_to_rad(25));
  for (ConstraintSet s : {ConstraintSet{false, false}, ConstraintSet{true, false},
                          ConstraintSet{true, true}}) {
    EXPECT_EQ(enumerate_feasible(p, s).classification, Classification::kDegenerateSquare);
  }
  EXPECT_EQ(analytic_two_solutions(p).status, AnalyticStatus::kDegenerateSquare);
}

TEST(EnumerateFeasible, NoRotationLeavesTheAngleConstraintWithoutEffect) {
  // View 2 repeats view 1, so AC cannot remove anything SC keeps.
  const auto p = ConstraintProblem::from_ground_truth(4, 2, deg_to_rad(30), 0.0);
  const SolutionSet sc = enumerate_feasible(p, {true, false});
  const SolutionSet ac = enumerate_feasible(p, {true, true});
  EXPECT_EQ(sc.classification, ac.classification);
  EXPECT_EQ(sc.grid_feasible, ac.grid_feasible);
  bool has_gt = false;
  bool has_mirror = false;
  for (const Candidate& c : ac.solutions) {
    has_gt = has_gt || gap_deg(c.theta, deg_to_rad(30)) < 0.5;
    has_mirror = has_mirror || gap_deg(c.theta, deg_to_rad(-30)) < 0.5;
  }
  EXPECT_TRUE(has_gt);
  EXPECT_TRUE(has_mirror);
}

TEST(EnumerateFeasible, InconsistentViewsHaveNoSolution) {
  const ConstraintProblem p{{10, 3}, {50, 50}, deg_to_rad(20)};
  EXPECT_EQ(enumerate_feasible(p, {true, false}).classification, Classification::kEmpty);
  EXPECT_EQ(analytic_two_solutions(p).status, AnalyticStatus::kNoSolution);
}

TEST(EnumerateFeasible, CountsShrinkAsConstraintsAreAdded) {
  Rng rng(12);
  for (int i = 0; i < 40; ++i) {
    const double h = rng.uniform(5, 20);
    const double w = h * rng.uniform(1.05, 4);
    const double t = rng.uniform(-1.4, 1.4);
    const double dt = rng.uniform(0.2, 1.3);
    const auto p = ConstraintProblem::from_ground_truth(w, h, t, dt);
    const std::size_t a = enumerate_feasible(p, {false, false}).solutions.size();
    const std::size_t b = enumerate_feasible(p, {true, false}).solutions.size();
    const std::size_t c = enumerate_feasible(p, {true, true}).solutions.size();
    EXPECT_GE(a, b);
    EXPECT_GE(b, c);
  }
}

TEST(EnumerateFeasible, RoundTripRecoversTheBox) {
  Rng rng(13);
  int checked = 0;
  while (checked < 60) {
    const double h = rng.uniform(5, 20);
    const double w = h * rng.uniform(1.05, 4);
    const double t = rng.uniform(-kPi / 2, kPi / 2);
    if (std::abs(std::abs(t) - kPi / 4) < 0.02 || std::abs(t) < 0.02) continue;
    double dt = rng.uniform(deg_to_rad(10), deg_to_rad(80));
    if (rng.bernoulli(0.5)) dt = -dt;
    const auto p = ConstraintProblem::from_ground_truth(w, h, t, dt);
    const SolutionSet s = enumerate_feasible(p, {true, true});
    ASSERT_EQ(s.classification, Classification::kUnique) << "w=" << w << " h=" << h << " t=" << t;
    EXPECT_LT(gap_deg(s.solutions[0].theta, t), 0.25 + 1e-6);
    EXPECT_NEAR(s.solutions[0].w, w, 1e-3 * w);
    EXPECT_NEAR(s.solutions[0].h, h, 1e-3 * h);
    ++checked;
  }
}

TEST(AnalyticTwoSolutions, MatchesGroundTruthPair) {
  const auto p = ConstraintProblem::from_ground_truth(4, 2, deg_to_rad(30), deg_to_rad(25));
  const TwoSolutions s = analytic_two_solutions(p);
  ASSERT_EQ(s.status, AnalyticStatus::kOk);
  EXPECT_NEAR(s.coincident.theta, deg_to_rad(30), 1e-9);
  EXPECT_NEAR(s.symmetric.theta, deg_to_rad(-30), 1e-9);
  EXPECT_NEAR(s.coincident.w, 4, 1e-9);
  EXPECT_NEAR(s.coincident.h, 2, 1e-9);
}

TEST(AnalyticTwoSolutions, AxisAlignedCandidatesCoincide) {
  const auto p = ConstraintProblem::from_ground_truth(4, 2, 0.0, deg_to_rad(25));
  const TwoSolutions s = analytic_two_solutions(p);
  ASSERT_EQ(s.status, AnalyticStatus::kOk);
  EXPECT_NEAR(s.coincident.theta, 0.0, 1e-6);
  EXPECT_NEAR(s.symmetric.theta, 0.0, 1e-6);
}

TEST(AnalyticTwoSolutions, SymmetricCandidateFailsOnlyTheAngleConstraint) {
  Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    const double h = rng.uniform(5, 20);
    const double w = h * rng.uniform(1.2, 4);
    double t = rng.uniform(0.1, 1.4);
    if (std::abs(t - kPi / 4) < 0.05) continue;
    if (rng.bernoulli(0.5)) t = -t;
    const double dt = rng.uniform(0.2, 1.3);
    const auto p = ConstraintProblem::from_ground_truth(w, h, t, dt);
    const TwoSolutions s = analytic_two_solutions(p);
    ASSERT_EQ(s.status, AnalyticStatus::kOk);
    const double tol = 1e-6 * std::max(w, h) * 4;
    EXPECT_LE(scale_residual(p, s.symmetric.w, s.symmetric.h), tol);
    EXPECT_LE(angle_residual(p, s.coincident.w, s.coincident.h, s.coincident.theta), tol);
    EXPECT_GT(angle_residual(p, s.symmetric.w, s.symmetric.h, s.symmetric.theta), tol);
  }
}
