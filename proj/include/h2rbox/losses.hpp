#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <ceres/jet.h>

#include "h2rbox/geometry.hpp"

namespace h2rbox {

enum class IouLossKind {
  kNegLog,    ///< -ln(IoU)
  kOneMinus,  ///< 1 - IoU
};

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kIouFloor = 1e-6;
inline constexpr double kCenternessSumFloor = 1e-6;

struct LossWeights {
  double mu1 = 1.0;
  double mu2 = 1.0;
  double mu3 = 1.0;
  double gamma1 = 0.15;
  double gamma2 = 1.0;
  double lambda = 0.4;

  bool valid() const {
    return mu1 >= 0 && mu2 >= 0 && mu3 >= 0 && gamma1 >= 0 && gamma2 >= 0 && lambda >= 0;
  }
};

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

struct Prediction {
  Point location;
  RBox rbox;
  /// Sigmoid probability per foreground class; entry k belongs to class k + 1.
  std::vector<double> class_probs;
  double centerness = 1.0;
};

struct Target {
  Point location;
  /// 0 is background.
  int class_id = 0;
  double centerness = 0.0;
  HBox gt_hbox;
  std::optional<RBox> target_rbox;
  /// False for locations in the invalid border region; excluded from every sum.
  bool valid = true;
  /// Index of the scene object the location is assigned to, -1 for background.
  int object_index = -1;

  bool positive() const { return valid && class_id > 0; }
};

// Scalar kernels shared by the double API and the autodiff path.
namespace kernels {

template <class T>
struct Box {
  T cx, cy, w, h, theta;
};

inline double value_of(double x) { return x; }
template <class T, int N>
double value_of(const ceres::Jet<T, N>& x) {
  return x.a;
}

template <class T>
T min_of(const T& a, const T& b) {
  return a < b ? a : b;
}
template <class T>
T max_of(const T& a, const T& b) {
  return a < b ? b : a;
}

template <class T>
Box<T> lift(const RBox& b) {
  return {T(b.cx), T(b.cy), T(b.w), T(b.h), T(b.theta)};
}

/// Drops derivative information.
template <class T>
Box<T> detach(const Box<T>& b) {
  return {T(value_of(b.cx)), T(value_of(b.cy)), T(value_of(b.w)), T(value_of(b.h)),
          T(value_of(b.theta))};
}

template <class T>
T iou_loss(const T& iou, IouLossKind kind) {
  using std::log;
  const T floored = value_of(iou) < kIouFloor ? T(kIouFloor) : iou;
  return kind == IouLossKind::kNegLog ? -log(floored) : T(1.0) - floored;
}

/// IoU of axis-aligned boxes given as centers and sizes.
template <class T>
T hbox_iou(const T& ax, const T& ay, const T& aw, const T& ah, const T& bx, const T& by,
           const T& bw, const T& bh) {
  const T iw = min_of<T>(ax + 0.5 * aw, bx + 0.5 * bw) - max_of<T>(ax - 0.5 * aw, bx - 0.5 * bw);
  const T ih = min_of<T>(ay + 0.5 * ah, by + 0.5 * bh) - max_of<T>(ay - 0.5 * ah, by - 0.5 * bh);
  if (!(value_of(iw) > 0.0) || !(value_of(ih) > 0.0)) return T(0.0);
  const T inter = iw * ih;
  return inter / (aw * ah + bw * bh - inter);
}

/// IoU of two origin-centered boxes (-w, -h, w, h) style.
template <class T>
T centered_iou(const T& aw, const T& ah, const T& bw, const T& bh) {
  const T inter = min_of(aw, bw) * min_of(ah, bh);
  return inter / (aw * ah + bw * bh - inter);
}

template <class T>
std::array<T, 2> circumscribed(const T& w, const T& h, const T& theta) {
  using std::abs;
  using std::cos;
  using std::sin;
  const T c = abs(cos(theta));
  const T s = abs(sin(theta));
  return {w * c + h * s, w * s + h * c};
}

/// L_reg(r2h(pred), gt).
template <class T>
T r2h_loss(const Box<T>& pred, const HBox& gt, IouLossKind kind) {
  const auto [W, H] = circumscribed(pred.w, pred.h, pred.theta);
  return iou_loss(hbox_iou<T>(pred.cx, pred.cy, W, H, T(gt.cx), T(gt.cy), T(gt.w), T(gt.h)),
                  kind);
}

template <class T>
T l_xy(const Box<T>& a, const Box<T>& b) {
  using std::abs;
  return abs(a.cx - b.cx) + abs(a.cy - b.cy);
}

template <class T>
T l_wh_theta(const Box<T>& target, const Box<T>& pred, IouLossKind kind) {
  using std::abs;
  using std::cos;
  using std::sin;
  const T d = target.theta - pred.theta;
  const T same = iou_loss(centered_iou(target.w, target.h, pred.w, pred.h), kind) + abs(sin(d));
  const T swapped =
      iou_loss(centered_iou(target.w, target.h, pred.h, pred.w), kind) + abs(cos(d));
  return min_of(same, swapped);
}

template <class T>
T ss_reg(const Box<T>& target, const Box<T>& pred, const LossWeights& w, IouLossKind kind) {
  return w.gamma1 * l_xy(target, pred) + w.gamma2 * l_wh_theta(target, pred, kind);
}

template <class T>
Box<T> rotate(const Box<T>& b, const ViewRotation& v) {
  const auto m = v.matrix();
  const Point c = v.center();
  const T dx = b.cx - c.x;
  const T dy = b.cy - c.y;
  return {dx * m[0] + dy * m[1] + c.x, dx * m[2] + dy * m[3] + c.y, b.w, b.h,
          b.theta + v.delta_theta()};
}

}  // namespace kernels

double iou_reg_loss(const HBox& pred, const HBox& gt, IouLossKind kind = IouLossKind::kNegLog);
double focal_loss(double p, bool is_positive, FocalParams params = {});
double centerness_loss(double cn_pred, double cn_target);

struct WsLossBreakdown {
  double cls = 0.0;
  double cn = 0.0;
  double reg = 0.0;
  double total = 0.0;
  std::size_t num_positives = 0;
  bool empty_positives = false;
};

struct LossOptions {
  IouLossKind iou_kind = IouLossKind::kNegLog;
  FocalParams focal;
};

/// WS loss over aligned prediction/target lists. `cls`, `cn`, `reg` are the
/// weighted components.
WsLossBreakdown ws_loss(std::span<const Prediction> preds, std::span<const Target> targets,
                        const LossWeights& weights, const LossOptions& opts = {});

double l_xy(const RBox& a, const RBox& b);
double l_wh_theta(const RBox& target, const RBox& pred,
                  IouLossKind kind = IouLossKind::kNegLog);
double ss_reg_loss(const RBox& target, const RBox& pred, const LossWeights& weights,
                   IouLossKind kind = IouLossKind::kNegLog);

/// One SS-branch location: its re-assigned target (carrying rbox^{ws*}) and the
/// SS prediction.
struct SsPair {
  Target target;
  RBox prediction;
};

struct SsLossResult {
  double value = 0.0;
  bool empty_positives = false;
};

SsLossResult ss_loss(std::span<const SsPair> pairs, const LossWeights& weights,
                     IouLossKind kind = IouLossKind::kNegLog);

double total_loss(double ws, double ss, const LossWeights& weights);

struct LossBreakdown {
  WsLossBreakdown ws;
  double ss = 0.0;
  double total = 0.0;
  LossWeights weights;
};

/// Everything needed to score one positive location seen in both views: the
/// WS prediction in view 1 and the SS prediction in view 2.
struct PairTerms {
  HBox view1_hbox;
  /// Supervises the SS prediction's circumscribed rectangle when present.
  std::optional<HBox> view2_hbox;
  ViewRotation rotation;
  bool ss_active = true;
  bool stop_grad_target = true;
  IouLossKind iou_kind = IouLossKind::kNegLog;
};

/// WS terms on both views plus lambda times the SS term, whose target is
/// `source` (normally `ws` itself) rotated into view 2.
template <class T>
T pair_total_loss(const kernels::Box<T>& ws, const kernels::Box<T>& ss,
                  const kernels::Box<T>& source, const PairTerms& terms,
                  const LossWeights& weights) {
  T ws_term = weights.mu3 * kernels::r2h_loss(ws, terms.view1_hbox, terms.iou_kind);
  if (terms.view2_hbox) {
    ws_term += weights.mu3 * kernels::r2h_loss(ss, *terms.view2_hbox, terms.iou_kind);
  }
  if (!terms.ss_active) return ws_term;
  const kernels::Box<T> from = terms.stop_grad_target ? kernels::detach(source) : source;
  const kernels::Box<T> target = kernels::rotate(from, terms.rotation);
  return ws_term + weights.lambda * kernels::ss_reg(target, ss, weights, terms.iou_kind);
}

template <class T>
T pair_total_loss(const kernels::Box<T>& ws, const kernels::Box<T>& ss, const PairTerms& terms,
                  const LossWeights& weights) {
  return pair_total_loss(ws, ss, ws, terms, weights);
}

double pair_total_loss(const RBox& ws, const RBox& ss, const PairTerms& terms,
                       const LossWeights& weights);

struct PairGradient {
  double value = 0.0;
  /// d/d(ws.cx, ws.cy, ws.w, ws.h, ws.theta, ss.cx, ss.cy, ss.w, ss.h, ss.theta).
  std::array<double, 10> grad{};
};

/// Exact gradient by forward-mode automatic differentiation.
PairGradient pair_total_loss_gradient(const RBox& ws, const RBox& ss, const PairTerms& terms,
                                      const LossWeights& weights);

}  // namespace h2rbox
