#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "h2rbox/geometry.hpp"
#include "h2rbox/losses.hpp"
#include "h2rbox/random.hpp"

namespace h2rbox {

/// Point-sampling IoU: uniform samples over the bounding box of both boxes,
/// counted by inside-a / inside-b membership.
double monte_carlo_iou(const RBox& a, const RBox& b, std::size_t samples, Rng& rng);

/// Point-in-rotated-box test, boundary inclusive.
bool rbox_contains(const RBox& b, Point p);

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  /// Configurations discarded before comparison (near kinks).
  std::size_t rejected = 0;
  /// Largest observed error in the suite's own metric.
  double worst = 0.0;
  double tolerance = 0.0;
  std::vector<std::string> messages;

  bool passed() const { return cases > 0 && failures == 0; }
};

struct IouSuiteOptions {
  std::size_t pairs = 50;
  std::size_t samples = 1'000'000;
  double tol = 5e-3;
  std::uint64_t seed = 0;
  /// Negative control: compares the IoU of the circumscribed HBoxes instead.
  bool inject_bug = false;
  int threads = 1;
};

SuiteResult run_iou_suite(const IouSuiteOptions& opts);

struct GradientSuiteOptions {
  std::size_t configs = 1000;
  /// Central-difference step relative to max(1, |x|).
  double rel_step = 1e-5;
  /// Infinity-norm relative error bound.
  double tol = 1e-4;
  std::uint64_t seed = 0;
  LossWeights weights;
};

/// Gradient of the per-location total loss against central differences, with
/// and without a detached SS target.
SuiteResult run_gradient_suite(const GradientSuiteOptions& opts);

/// Smallest distance of a configuration to a switching point of the loss
/// (abs, min/max and branch ties), each measured in its own units and divided
/// by `length_scale` for lengths.
double kink_distance(const RBox& ws, const RBox& ss, const PairTerms& terms,
                     const LossWeights& weights, double length_scale);

struct ConstraintSuiteOptions {
  std::size_t problems = 100;
  std::uint64_t seed = 0;
  double angle_tol = deg_to_rad(0.5);
  /// Relative tolerance on (w, h).
  double size_tol = 1e-2;
};

/// Closed-form solutions against the grid enumeration under HCRC+SC and
/// HCRC+SC+AC, plus the expected classification under HCRC alone.
SuiteResult run_constraint_suite(const ConstraintSuiteOptions& opts);

}  // namespace h2rbox
