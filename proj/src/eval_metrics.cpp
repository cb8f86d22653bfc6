#include "h2rbox/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace h2rbox {

std::vector<double> default_iou_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(0.5 + 0.05 * i);
  return out;
}

double match_and_ap(std::span<const Detection> dets, std::span<const SceneObject> gts,
                    double iou_thresh) {
  if (gts.empty() || dets.empty()) return 0.0;
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    if (dets[a].id != dets[b].id) return dets[a].id < dets[b].id;
    return a < b;
  });

  std::vector<bool> taken(gts.size(), false);
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i : order) {
    ++seen;
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = rbox_iou(dets[i].rbox, gts[g].gt_rbox);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= iou_thresh) {
      taken[best_gt] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }

  // Precision envelope, then the area under the step curve.
  for (std::size_t i = precision.size() - 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

namespace {

bool is_circular_class(const EvalConfig& cfg, int class_id) {
  return std::find(cfg.circular_classes.begin(), cfg.circular_classes.end(), class_id) !=
         cfg.circular_classes.end();
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

ApTriple ap_over_thresholds(std::span<const Detection> dets, std::span<const SceneObject> gts,
                            const std::vector<double>& thresholds) {
  ApTriple out;
  if (thresholds.empty()) return out;
  double sum = 0.0;
  for (double t : thresholds) {
    const double ap = match_and_ap(dets, gts, t);
    sum += ap;
    if (std::abs(t - 0.5) < 1e-12) out.ap50 = ap;
    if (std::abs(t - 0.75) < 1e-12) out.ap75 = ap;
  }
  out.ap = sum / static_cast<double>(thresholds.size());
  return out;
}

}  // namespace

EvalResult evaluate(std::span<const Detection> dets, std::span<const SceneObject> gts,
                    const EvalConfig& cfg) {
  EvalResult result;
  std::vector<Detection> adjusted(dets.begin(), dets.end());
  if (cfg.s2_output_hbox_circular) {
    for (Detection& d : adjusted) {
      if (is_circular_class(cfg, d.class_id)) d.rbox = hbox_as_rbox(circumscribed_hbox(d.rbox));
    }
  }

  std::map<int, std::vector<SceneObject>> gt_by_class;
  std::map<int, std::vector<Detection>> det_by_class;
  for (const SceneObject& g : gts) gt_by_class[g.class_id].push_back(g);
  for (const Detection& d : adjusted) det_by_class[d.class_id].push_back(d);

  for (const auto& [cls, class_gts] : gt_by_class) {
    const std::vector<Detection>& class_dets = det_by_class[cls];
    ClassResult cr;
    cr.num_gt = class_gts.size();
    cr.num_det = class_dets.size();
    const ApTriple at50 = ap_over_thresholds(class_dets, class_gts, {0.5, 0.75});
    cr.ap = ap_over_thresholds(class_dets, class_gts, cfg.thresholds);
    cr.ap.ap50 = at50.ap50;
    cr.ap.ap75 = at50.ap75;
    result.per_class[cls] = cr;
  }
  if (!result.per_class.empty()) {
    for (const auto& [cls, cr] : result.per_class) {
      result.ap50 += cr.ap.ap50;
      result.ap75 += cr.ap.ap75;
      result.ap += cr.ap.ap;
    }
    const auto n = static_cast<double>(result.per_class.size());
    result.ap50 /= n;
    result.ap75 /= n;
    result.ap /= n;
  }

  std::map<int, const SceneObject*> gt_by_id;
  for (const SceneObject& g : gts) gt_by_id[g.id] = &g;
  std::vector<double> errors;
  for (const Detection& d : dets) {
    if (is_circular_class(cfg, d.class_id)) continue;
    const auto it = gt_by_id.find(d.id);
    if (it == gt_by_id.end() || it->second->circular) continue;
    errors.push_back(angle_error(d.rbox, it->second->gt_rbox));
  }
  result.angle.count = errors.size();
  if (!errors.empty()) {
    result.angle.median_deg = quantile(errors, 0.5);
    result.angle.p95_deg = quantile(errors, 0.95);
    const auto below =
        std::count_if(errors.begin(), errors.end(), [](double e) { return e < 3.0; });
    result.angle.fraction_below_3deg =
        static_cast<double>(below) / static_cast<double>(errors.size());
  }
  return result;
}

std::vector<Detection> detections_from_report(const RecoveryReport& report) {
  std::vector<Detection> out;
  out.reserve(report.objects.size());
  for (const ObjectOutcome& o : report.objects) {
    const double score = std::isfinite(o.final_loss) ? 1.0 / (1.0 + std::max(o.final_loss, 0.0))
                                                     : 0.0;
    out.push_back({o.object_id, o.pred, score, o.class_id});
  }
  return out;
}

EvalResult evaluate(const RecoveryReport& report, std::span<const SceneObject> gts,
                    const EvalConfig& cfg) {
  const std::vector<Detection> dets = detections_from_report(report);
  return evaluate(dets, gts, cfg);
}

}  // namespace h2rbox
