#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "h2rbox/geometry.hpp"
#include "h2rbox/losses.hpp"
#include "h2rbox/views_assign.hpp"

namespace h2rbox {

enum class Assigner { kO2O, kO2M };
std::string_view to_string(Assigner a);

enum class InitMode {
  /// GT HBox as an axis-aligned box, angle noise of a few degrees.
  kHorizontal,
  /// Both branches start at the mirror-image solution of their view.
  kSymmetric,
};
std::string_view to_string(InitMode m);

struct RecoveryConfig {
  LossWeights weights;
  int steps = 1500;
  /// In units of the object's larger HBox side (radians for the angle).
  double step_size = 0.1;
  /// View slots (K) per object, each with its own rotation.
  int num_views = 1;
  bool ss_enabled = true;
  /// WS supervision of the view-2 prediction, standing in for the shared
  /// backbone that keeps every view's prediction consistent with its HBox.
  bool ws_on_view2 = true;
  Assigner assigner = Assigner::kO2O;
  BorderMode border_mode = BorderMode::kPad;
  bool s1_mask_circular = false;
  bool s2_output_hbox_circular = false;
  /// Detach the WS prediction when it serves as the SS target.
  bool stop_grad_target = false;
  std::uint64_t seed = 0;

  InitMode init = InitMode::kHorizontal;
  double init_angle_noise = deg_to_rad(5.0);
  LocationConfig locations;
  DeltaThetaSampling delta_theta;
  IouLossKind iou_kind = IouLossKind::kNegLog;
  /// Learning rate decays from step_size to final_lr_fraction * step_size.
  double final_lr_fraction = 0.01;
  /// One running mean square per box, shared by its five components.
  double rms_decay = 0.99;
  double rms_eps = 1e-8;
  /// Minimum box side as a fraction of the scene side.
  double min_size_fraction = 1e-3;
  double flip_tau = deg_to_rad(5.0);
  int trace_every = 25;
  int threads = 1;

  /// Empty when valid, otherwise the first problem found.
  std::string validate() const;
};

/// Per-location trainable state. The SS prediction of view slot k is the WS
/// prediction plus a per-slot offset, carried into the sampled view. The offset
/// is what the network fails to make rotation-equivariant.
struct RecoveryState {
  std::vector<Location> locations;
  std::vector<RBox> ws_params;
  /// [location][slot] additive offsets on (cx, cy, w, h, theta), view-1 frame.
  std::vector<std::vector<std::array<double, 5>>> ss_offsets;

  RBox ss_prediction(std::size_t location, std::size_t slot, const ViewRotation& v) const;
};

struct ObjectOutcome {
  int object_id = 0;
  int class_id = 1;
  bool circular = false;
  RBox gt;
  RBox pred;
  /// Prediction as evaluated (circumscribed HBox for circular objects under S2).
  RBox output;
  double angle_error_deg = 0.0;
  /// Unset where the flip is undefined (near axis-aligned or circular GT).
  std::optional<bool> flipped;
  double iou = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;
};

struct RecoverySummary {
  std::size_t objects = 0;
  /// Objects removed by center-region cropping.
  std::size_t filtered = 0;
  double median_angle_error_deg = 0.0;
  double p95_angle_error_deg = 0.0;
  double fraction_below_3deg = 0.0;
  double flip_fraction = 0.0;
  double mean_iou = 0.0;
};

struct RecoveryReport {
  std::vector<ObjectOutcome> objects;
  RecoverySummary summary;
  std::vector<int> curve_steps;
  std::vector<double> loss_curve;
  bool diverged = false;
  int steps_run = 0;
};

RecoveryReport run_recovery(const SceneSpec& scene, const RecoveryConfig& cfg);

/// Recomputes each object's evaluated output, angle error, flip flag and IoU
/// from its raw prediction, then the summary.
void apply_output_strategy(RecoveryReport& report, bool s2_output_hbox_circular,
                           double flip_tau = deg_to_rad(5.0));

/// Angular difference of the two boxes' long axes, in [0, 90] degrees.
double angle_error(const RBox& pred, const RBox& gt);

/// True iff pred is closer to the mirror image of gt than to gt. Unset when
/// gt lies within tau of an axis, where the two coincide.
std::optional<bool> is_flipped(const RBox& pred, const RBox& gt, double tau = deg_to_rad(5.0));

RecoverySummary summarize(const std::vector<ObjectOutcome>& objects);

}  // namespace h2rbox
