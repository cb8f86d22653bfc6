#pragma once

#include <map>
#include <span>
#include <vector>

#include "h2rbox/geometry.hpp"
#include "h2rbox/recovery.hpp"
#include "h2rbox/views_assign.hpp"

namespace h2rbox {

struct Detection {
  /// Stable tie-break key among equal scores; normally the object id.
  int id = 0;
  RBox rbox;
  double score = 0.0;
  int class_id = 1;
};

/// 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_thresholds();

/// All-point interpolated AP of class-agnostic detections against `gts`.
/// Detections are visited by descending score (ascending id on ties) and each
/// claims the unmatched GT of highest IoU, if that IoU reaches `iou_thresh`.
double match_and_ap(std::span<const Detection> dets, std::span<const SceneObject> gts,
                    double iou_thresh);

struct EvalConfig {
  /// Replace detections of circular classes by their circumscribed HBox.
  bool s2_output_hbox_circular = false;
  std::vector<int> circular_classes{2};
  std::vector<double> thresholds = default_iou_thresholds();
};

struct ApTriple {
  double ap50 = 0.0;
  double ap75 = 0.0;
  /// Mean over the configured thresholds.
  double ap = 0.0;
};

struct ClassResult {
  ApTriple ap;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
};

struct AngleStats {
  std::size_t count = 0;
  double median_deg = 0.0;
  double p95_deg = 0.0;
  double fraction_below_3deg = 0.0;
};

struct EvalResult {
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ap = 0.0;
  std::map<int, ClassResult> per_class;
  /// Non-circular detections against the GT sharing their id.
  AngleStats angle;
};

/// Per-class AP averaged over the classes present in `gts`.
EvalResult evaluate(std::span<const Detection> dets, std::span<const SceneObject> gts,
                    const EvalConfig& cfg = {});

/// One detection per recovered object, scored 1 / (1 + final loss).
std::vector<Detection> detections_from_report(const RecoveryReport& report);

EvalResult evaluate(const RecoveryReport& report, std::span<const SceneObject> gts,
                    const EvalConfig& cfg = {});

}  // namespace h2rbox
