#include "h2rbox/constraint_lab.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace h2rbox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_dim(const ConstraintProblem& p) {
  return std::max({p.view1.w, p.view1.h, p.view2.w, p.view2.h});
}

double default_tol(const ConstraintProblem& p) { return 1e-6 * max_dim(p); }

/// Distance between two angles on the period-pi circle.
double angular_gap(double a, double b) {
  const double d = std::abs(angle_normalize(a - b));
  return std::min(d, kPi - d);
}

template <class F>
double golden_section_min(F&& f, double lo, double hi, int iterations = 90) {
  constexpr double kRatio = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double x1 = b - kRatio * (b - a);
  double x2 = a + kRatio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iterations && b - a > 1e-15; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kRatio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kRatio * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

bool is_square(Dims d, double tol) { return std::abs(d.w - d.h) <= tol; }

}  // namespace

bool ConstraintProblem::valid() const {
  const auto ok = [](Dims d) {
    return std::isfinite(d.w) && std::isfinite(d.h) && d.w > 0.0 && d.h > 0.0;
  };
  return ok(view1) && ok(view2) && std::isfinite(delta_theta);
}

ConstraintProblem ConstraintProblem::from_ground_truth(double w, double h, double theta,
                                                       double delta_theta) {
  return {circumscribed_dims(w, h, theta), circumscribed_dims(w, h, theta + delta_theta),
          delta_theta};
}

std::string ConstraintSet::name() const {
  std::string out = "hcrc";
  if (scale) out += "+sc";
  if (angle) out += "+ac";
  return out;
}

std::optional<ConstraintSet> ConstraintSet::parse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "hcrc") return ConstraintSet{false, false};
  if (lower == "hcrc+sc") return ConstraintSet{true, false};
  if (lower == "hcrc+sc+ac") return ConstraintSet{true, true};
  return std::nullopt;
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::kEmpty: return "EMPTY";
    case Classification::kUnique: return "UNIQUE";
    case Classification::kTwoFold: return "TWO_FOLD";
    case Classification::kMultiple: return "MULTIPLE";
    case Classification::kInfiniteFamily: return "INFINITE_FAMILY";
    case Classification::kDegenerateSquare: return "DEGENERATE_SQUARE";
  }
  return "UNKNOWN";
}

Dims circumscribed_dims(double w, double h, double theta) {
  const double c = std::abs(std::cos(theta));
  const double s = std::abs(std::sin(theta));
  return {w * c + h * s, w * s + h * c};
}

WhSolution solve_wh_given_theta(double W, double H, double theta, double singular_tol) {
  const double c = std::abs(std::cos(theta));
  const double s = std::abs(std::sin(theta));
  const double det = c * c - s * s;
  if (std::abs(det) < singular_tol) return {SolveStatus::kSingular, 0.0, 0.0};
  const double w = (W * c - H * s) / det;
  const double h = (H * c - W * s) / det;
  if (!(w > 0.0) || !(h > 0.0)) return {SolveStatus::kInfeasible, w, h};
  return {SolveStatus::kOk, w, h};
}

double view1_residual(const ConstraintProblem& p, double w, double h, double theta) {
  const Dims d = circumscribed_dims(w, h, theta);
  return std::max(std::abs(d.w - p.view1.w), std::abs(d.h - p.view1.h));
}

double angle_residual(const ConstraintProblem& p, double w, double h, double theta) {
  const Dims d = circumscribed_dims(w, h, theta + p.delta_theta);
  return std::max(std::abs(d.w - p.view2.w), std::abs(d.h - p.view2.h));
}

double scale_residual(const ConstraintProblem& p, double w, double h) {
  const auto violation = [&](double phi) {
    const Dims d = circumscribed_dims(w, h, phi);
    return std::max(std::abs(d.w - p.view2.w), std::abs(d.h - p.view2.h));
  };
  const double det = w * w - h * h;
  if (std::abs(det) > 1e-9 * std::max(w, h) * std::max(w, h)) {
    // [w h; h w] (|cos phi|, |sin phi|) = (W2, H2)
    const double c = (w * p.view2.w - h * p.view2.h) / det;
    const double s = (w * p.view2.h - h * p.view2.w) / det;
    return violation(std::atan2(std::max(s, 0.0), std::max(c, 0.0)));
  }
  // Square-like (w, h): the view-2 angle is not determined by a linear solve.
  constexpr int kSamples = 721;
  double best_phi = 0.0;
  double best = kInf;
  for (int i = 0; i < kSamples; ++i) {
    const double phi = 0.5 * kPi * i / (kSamples - 1);
    const double v = violation(phi);
    if (v < best) {
      best = v;
      best_phi = phi;
    }
  }
  const double step = 0.5 * kPi / (kSamples - 1);
  const double phi = golden_section_min(violation, best_phi - step, best_phi + step);
  return std::min(best, violation(phi));
}

SolutionSet enumerate_feasible(const ConstraintProblem& p, ConstraintSet constraints,
                               const EnumerateOptions& opts) {
  SolutionSet out;
  out.tolerance = opts.tol > 0.0 ? opts.tol : default_tol(p);
  const double tol = out.tolerance;
  const double step = opts.grid_step;
  const double radius = opts.cluster_radius > 0.0 ? opts.cluster_radius : 2.0 * step;
  const double guard = opts.guard_band;
  if (!p.valid() || !(step > 0.0)) return out;

  out.skipped = {{-0.25 * kPi - guard, -0.25 * kPi + guard},
                 {0.25 * kPi - guard, 0.25 * kPi + guard}};

  const bool degenerate = is_square(p.view1, tol) && is_square(p.view2, tol);
  // Each rectangle appears twice over a period of pi (edges exchanged); only
  // the w >= h representation is kept unless view 1 is square.
  const bool keep_all = is_square(p.view1, tol);

  const auto solve_at = [&](double theta) -> std::optional<Candidate> {
    if (std::abs(std::abs(theta) - 0.25 * kPi) < guard) return std::nullopt;
    const WhSolution s = solve_wh_given_theta(p.view1.w, p.view1.h, theta);
    if (s.status != SolveStatus::kOk) return std::nullopt;
    if (!keep_all && s.w < s.h) return std::nullopt;
    double r = view1_residual(p, s.w, s.h, theta);
    if (constraints.scale) r = std::max(r, scale_residual(p, s.w, s.h));
    if (constraints.angle) r = std::max(r, angle_residual(p, s.w, s.h, theta));
    return Candidate{s.w, s.h, angle_normalize(theta), r};
  };
  const auto residual_at = [&](double theta) {
    const auto c = solve_at(theta);
    return c ? c->residual : kInf;
  };

  const auto n = static_cast<std::size_t>(std::llround(kPi / step));
  std::vector<std::optional<Candidate>> grid(n);
  std::vector<Candidate> direct;
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = solve_at(-0.5 * kPi + static_cast<double>(i) * step);
    if (grid[i] && grid[i]->residual <= tol) direct.push_back(*grid[i]);
  }
  out.grid_feasible = direct.size();

  if (degenerate) {
    out.solutions = std::move(direct);
    out.classification = Classification::kDegenerateSquare;
    return out;
  }
  if (direct.size() >= opts.continuum_samples) {
    out.solutions = std::move(direct);
    out.classification = Classification::kInfiniteFamily;
    return out;
  }

  // Local minima of the residual on the circular grid, refined in place.
  std::vector<Candidate> roots;
  const auto value = [&](std::size_t i) { return grid[i] ? grid[i]->residual : kInf; };
  for (std::size_t i = 0; i < n; ++i) {
    if (!grid[i]) continue;
    const double here = value(i);
    if (here > value((i + n - 1) % n) || here > value((i + 1) % n)) continue;
    const double theta0 = -0.5 * kPi + static_cast<double>(i) * step;
    double theta = golden_section_min(residual_at, theta0 - step, theta0 + step);
    if (!(residual_at(theta) <= here)) theta = theta0;
    const auto c = solve_at(theta);
    if (c && c->residual <= tol) roots.push_back(*c);
  }

  std::sort(roots.begin(), roots.end(),
            [](const Candidate& a, const Candidate& b) { return a.theta < b.theta; });
  std::vector<Candidate> clusters;
  for (const Candidate& c : roots) {
    if (!clusters.empty() && angular_gap(clusters.back().theta, c.theta) <= radius) {
      if (c.residual < clusters.back().residual) clusters.back() = c;
    } else {
      clusters.push_back(c);
    }
  }
  if (clusters.size() > 1 &&
      angular_gap(clusters.front().theta, clusters.back().theta) <= radius) {
    if (clusters.back().residual < clusters.front().residual) {
      clusters.front() = clusters.back();
    }
    clusters.pop_back();
    std::sort(clusters.begin(), clusters.end(),
              [](const Candidate& a, const Candidate& b) { return a.theta < b.theta; });
  }

  out.solutions = std::move(clusters);
  switch (out.solutions.size()) {
    case 0: out.classification = Classification::kEmpty; break;
    case 1: out.classification = Classification::kUnique; break;
    case 2: out.classification = Classification::kTwoFold; break;
    default: out.classification = Classification::kMultiple; break;
  }
  return out;
}

TwoSolutions analytic_two_solutions(const ConstraintProblem& p, double tol) {
  TwoSolutions out;
  if (!p.valid()) return out;
  if (!(tol > 0.0)) tol = default_tol(p);
  if (is_square(p.view1, tol) && is_square(p.view2, tol)) {
    out.status = AnalyticStatus::kDegenerateSquare;
    return out;
  }
  if (is_square(p.view1, tol)) {
    out.status = AnalyticStatus::kSingular;
    return out;
  }

  // With u = |sin 2 theta|: (w+h)^2 (1+u) = (W1+H1)^2 and (w-h)^2 (1-u) =
  // (W1-H1)^2, and likewise for view 2 with its own angle. Eliminating the
  // view-2 angle leaves A (1+u) + B (1-u) = 2, linear in u.
  const double a = std::pow((p.view2.w + p.view2.h) / (p.view1.w + p.view1.h), 2);
  const double b = std::pow((p.view2.w - p.view2.h) / (p.view1.w - p.view1.h), 2);
  if (std::abs(a - b) < 1e-14) return out;
  double u = (2.0 - a - b) / (a - b);
  constexpr double kSlack = 1e-9;
  if (u < -kSlack || u > 1.0 + kSlack) return out;
  u = std::clamp(u, 0.0, 1.0);

  const double half = 0.5 * std::asin(u);
  const double theta0 = p.view1.w > p.view1.h ? half : 0.5 * kPi - half;

  Candidate cands[2];
  const double signs[2] = {1.0, -1.0};
  for (int i = 0; i < 2; ++i) {
    const double theta = angle_normalize(signs[i] * theta0);
    const WhSolution s = solve_wh_given_theta(p.view1.w, p.view1.h, theta);
    if (s.status == SolveStatus::kSingular) {
      out.status = AnalyticStatus::kSingular;
      return out;
    }
    if (s.status != SolveStatus::kOk) return out;
    const double r = std::max(view1_residual(p, s.w, s.h, theta), scale_residual(p, s.w, s.h));
    if (r > tol) return out;
    cands[i] = {s.w, s.h, theta, r};
  }
  const double ac0 = angle_residual(p, cands[0].w, cands[0].h, cands[0].theta);
  const double ac1 = angle_residual(p, cands[1].w, cands[1].h, cands[1].theta);
  const bool first = ac0 <= ac1;
  out.coincident = first ? cands[0] : cands[1];
  out.symmetric = first ? cands[1] : cands[0];
  out.status = AnalyticStatus::kOk;
  return out;
}

}  // namespace h2rbox
