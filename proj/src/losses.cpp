#include "h2rbox/losses.hpp"

#include <algorithm>

namespace h2rbox {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

double iou_reg_loss(const HBox& pred, const HBox& gt, IouLossKind kind) {
  return kernels::iou_loss(hbox_iou(pred, gt), kind);
}

double focal_loss(double p, bool is_positive, FocalParams params) {
  p = clamp_prob(p);
  if (is_positive) return -params.alpha * std::pow(1.0 - p, params.gamma) * std::log(p);
  return -(1.0 - params.alpha) * std::pow(p, params.gamma) * std::log(1.0 - p);
}

double centerness_loss(double cn_pred, double cn_target) {
  const double p = clamp_prob(cn_pred);
  const double t = std::clamp(cn_target, 0.0, 1.0);
  double loss = 0.0;
  if (t > 0.0) loss -= t * std::log(p);
  if (t < 1.0) loss -= (1.0 - t) * std::log(1.0 - p);
  return loss;
}

WsLossBreakdown ws_loss(std::span<const Prediction> preds, std::span<const Target> targets,
                        const LossWeights& weights, const LossOptions& opts) {
  WsLossBreakdown out;
  const std::size_t n = std::min(preds.size(), targets.size());
  double cls = 0.0;
  double cn = 0.0;
  double reg = 0.0;
  double cn_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Prediction& p = preds[i];
    const Target& t = targets[i];
    if (!t.valid) continue;
    for (std::size_t k = 0; k < p.class_probs.size(); ++k) {
      cls += focal_loss(p.class_probs[k], t.class_id == static_cast<int>(k) + 1, opts.focal);
    }
    if (!t.positive()) continue;
    ++out.num_positives;
    cn += centerness_loss(p.centerness, t.centerness);
    reg += t.centerness * iou_reg_loss(circumscribed_hbox(p.rbox), t.gt_hbox, opts.iou_kind);
    cn_sum += t.centerness;
  }
  const double n_pos = std::max<double>(static_cast<double>(out.num_positives), 1.0);
  out.empty_positives = out.num_positives == 0;
  out.cls = weights.mu1 * cls / n_pos;
  if (!out.empty_positives) {
    out.cn = weights.mu2 * cn / n_pos;
    out.reg = weights.mu3 * reg / std::max(cn_sum, kCenternessSumFloor);
  }
  out.total = out.cls + out.cn + out.reg;
  return out;
}

double l_xy(const RBox& a, const RBox& b) {
  return kernels::l_xy(kernels::lift<double>(a), kernels::lift<double>(b));
}

double l_wh_theta(const RBox& target, const RBox& pred, IouLossKind kind) {
  return kernels::l_wh_theta(kernels::lift<double>(target), kernels::lift<double>(pred), kind);
}

double ss_reg_loss(const RBox& target, const RBox& pred, const LossWeights& weights,
                   IouLossKind kind) {
  return kernels::ss_reg(kernels::lift<double>(target), kernels::lift<double>(pred), weights,
                         kind);
}

SsLossResult ss_loss(std::span<const SsPair> pairs, const LossWeights& weights,
                     IouLossKind kind) {
  SsLossResult out;
  double acc = 0.0;
  double cn_sum = 0.0;
  bool any = false;
  for (const SsPair& pair : pairs) {
    const Target& t = pair.target;
    if (!t.positive() || !t.target_rbox) continue;
    any = true;
    acc += t.centerness * ss_reg_loss(*t.target_rbox, pair.prediction, weights, kind);
    cn_sum += t.centerness;
  }
  out.empty_positives = !any;
  out.value = any ? acc / std::max(cn_sum, kCenternessSumFloor) : 0.0;
  return out;
}

double total_loss(double ws, double ss, const LossWeights& weights) {
  return ws + weights.lambda * ss;
}

double pair_total_loss(const RBox& ws, const RBox& ss, const PairTerms& terms,
                       const LossWeights& weights) {
  return pair_total_loss(kernels::lift<double>(ws), kernels::lift<double>(ss), terms, weights);
}

PairGradient pair_total_loss_gradient(const RBox& ws, const RBox& ss, const PairTerms& terms,
                                      const LossWeights& weights) {
  using J = ceres::Jet<double, 10>;
  const kernels::Box<J> a{J(ws.cx, 0), J(ws.cy, 1), J(ws.w, 2), J(ws.h, 3), J(ws.theta, 4)};
  const kernels::Box<J> b{J(ss.cx, 5), J(ss.cy, 6), J(ss.w, 7), J(ss.h, 8), J(ss.theta, 9)};
  const J v = pair_total_loss(a, b, terms, weights);
  PairGradient out;
  out.value = v.a;
  for (int i = 0; i < 10; ++i) out.grad[static_cast<std::size_t>(i)] = v.v[i];
  return out;
}

}  // namespace h2rbox
