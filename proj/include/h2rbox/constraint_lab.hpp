#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "h2rbox/geometry.hpp"

namespace h2rbox {

/// Width and height of an axis-aligned circumscribed rectangle.
struct Dims {
  double w = 0.0;
  double h = 0.0;
};

/// Observed circumscribed rectangles of the two views and the known rotation
/// between them.
struct ConstraintProblem {
  Dims view1;
  Dims view2;
  double delta_theta = 0.0;

  bool valid() const;
  /// Problem observed from a ground-truth box (w, h, theta) seen in view 1 and
  /// rotated by delta_theta in view 2.
  static ConstraintProblem from_ground_truth(double w, double h, double theta,
                                             double delta_theta);
};

/// Horizontal circumscribed rectangle constraint is always active; the scale
/// constraint needs view 2 and the angle constraint needs the scale one.
struct ConstraintSet {
  bool scale = false;
  bool angle = false;

  std::string name() const;
  /// Accepts "hcrc", "hcrc+sc", "hcrc+sc+ac" (case-insensitive).
  static std::optional<ConstraintSet> parse(std::string_view text);
  friend bool operator==(ConstraintSet, ConstraintSet) = default;
};

enum class Classification {
  kEmpty,
  kUnique,
  kTwoFold,
  kMultiple,
  kInfiniteFamily,
  kDegenerateSquare,
};

std::string_view to_string(Classification c);

struct Candidate {
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;
  /// Largest absolute violation of the active equations.
  double residual = 0.0;
};

struct AngleInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SolutionSet {
  std::vector<Candidate> solutions;
  Classification classification = Classification::kEmpty;
  /// Angle ranges excluded from the sweep because the view-1 inverse is singular.
  std::vector<AngleInterval> skipped;
  /// Number of grid angles that satisfy the active equations directly.
  std::size_t grid_feasible = 0;
  double tolerance = 0.0;
};

struct EnumerateOptions {
  double grid_step = deg_to_rad(0.25);
  /// <= 0 selects 1e-6 times the largest observed dimension.
  double tol = 0.0;
  double guard_band = deg_to_rad(0.5);
  /// <= 0 selects twice the grid step.
  double cluster_radius = 0.0;
  /// Grid samples satisfying the equations directly, beyond which the set is
  /// reported as a continuum.
  std::size_t continuum_samples = 8;
};

/// (w|cos t| + h|sin t|, w|sin t| + h|cos t|).
Dims circumscribed_dims(double w, double h, double theta);

enum class SolveStatus { kOk, kSingular, kInfeasible };

struct WhSolution {
  SolveStatus status = SolveStatus::kSingular;
  double w = 0.0;
  double h = 0.0;
};

/// Inverts circumscribed_dims for a known angle. kSingular when |cos 2 theta|
/// is below `singular_tol`, kInfeasible when the solution is not positive.
WhSolution solve_wh_given_theta(double W, double H, double theta,
                                double singular_tol = 1e-9);

SolutionSet enumerate_feasible(const ConstraintProblem& p, ConstraintSet constraints,
                               const EnumerateOptions& opts = {});

enum class AnalyticStatus { kOk, kNoSolution, kDegenerateSquare, kSingular };

struct TwoSolutions {
  AnalyticStatus status = AnalyticStatus::kNoSolution;
  Candidate coincident;
  Candidate symmetric;
};

/// Closed-form pair of boxes satisfying both circumscribed rectangles with a
/// common scale. The candidate consistent with the known view rotation is
/// reported as coincident.
TwoSolutions analytic_two_solutions(const ConstraintProblem& p, double tol = 0.0);

/// Largest violation of the view-1 equations by (w, h, theta).
double view1_residual(const ConstraintProblem& p, double w, double h, double theta);
/// Smallest largest-violation of the view-2 equations over the view-2 angle.
double scale_residual(const ConstraintProblem& p, double w, double h);
/// Violation of the view-2 equations when the view-2 angle is theta + delta_theta.
double angle_residual(const ConstraintProblem& p, double w, double h, double theta);

}  // namespace h2rbox
