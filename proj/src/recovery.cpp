#include "h2rbox/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace h2rbox {

std::string_view to_string(Assigner a) { return a == Assigner::kO2O ? "o2o" : "o2m"; }

std::string_view to_string(InitMode m) {
  return m == InitMode::kHorizontal ? "horizontal" : "symmetric";
}

std::string RecoveryConfig::validate() const {
  if (steps <= 0) return "steps must be positive";
  if (num_views < 1) return "num_views must be at least 1";
  if (!(step_size > 0.0) || !std::isfinite(step_size)) return "step_size must be positive";
  if (!weights.valid()) return "loss weights must be non-negative";
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) return "rms_decay must lie in (0, 1)";
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    return "final_lr_fraction must lie in (0, 1]";
  }
  if (!(flip_tau >= 0.0)) return "flip_tau must be non-negative";
  if (threads < 1) return "threads must be at least 1";
  if (trace_every < 1) return "trace_every must be at least 1";
  return {};
}

namespace {

using Offset = std::array<double, 5>;

RBox apply_offset(const RBox& b, const Offset& d) {
  return {b.cx + d[0], b.cy + d[1], b.w + d[2], b.h + d[3], b.theta + d[4]};
}

/// Rotation of a box without folding the angle, matching the autodiff path.
RBox rotate_unfolded(const RBox& b, const ViewRotation& v) {
  const Point c = v.apply(b.center());
  return {c.x, c.y, b.w, b.h, b.theta + v.delta_theta()};
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct ObjectSetup {
  const SceneObject* object = nullptr;
  double scale = 1.0;
  double centerness_sum = 0.0;
  std::vector<std::size_t> locations;
};

/// One sampled view of one object at one step.
struct SlotView {
  ViewRotation rotation;
  HBox view2_hbox;
  /// Object present in the sampled view pair at all (CROP may drop it).
  bool present = true;
  /// View-2 supervision usable (PAD masks the invalid border region).
  bool valid = true;
};

constexpr int kParamsPerBox = 5;

}  // namespace

RBox RecoveryState::ss_prediction(std::size_t location, std::size_t slot,
                                  const ViewRotation& v) const {
  return rotate_unfolded(apply_offset(ws_params[location], ss_offsets[location][slot]), v);
}

double angle_error(const RBox& pred, const RBox& gt) {
  const RBox p = canonical_rbox(pred);
  const RBox g = canonical_rbox(gt);
  const double d = std::abs(angle_normalize(p.theta - g.theta));
  return rad_to_deg(std::min(d, kPi - d));
}

std::optional<bool> is_flipped(const RBox& pred, const RBox& gt, double tau) {
  const double axis_gap = std::abs(canonical_rbox(gt).theta);
  if (axis_gap <= tau || 0.5 * kPi - axis_gap <= tau) return std::nullopt;
  return angle_error(pred, symmetric_rbox(gt)) < angle_error(pred, gt);
}

RecoverySummary summarize(const std::vector<ObjectOutcome>& objects) {
  RecoverySummary s;
  s.objects = objects.size();
  std::vector<double> errors;
  std::size_t flips = 0;
  std::size_t flip_defined = 0;
  double iou_sum = 0.0;
  for (const ObjectOutcome& o : objects) {
    iou_sum += o.iou;
    if (o.circular) continue;
    errors.push_back(o.angle_error_deg);
    if (o.flipped) {
      ++flip_defined;
      if (*o.flipped) ++flips;
    }
  }
  if (!objects.empty()) s.mean_iou = iou_sum / static_cast<double>(objects.size());
  if (!errors.empty()) {
    s.median_angle_error_deg = percentile(errors, 0.5);
    s.p95_angle_error_deg = percentile(errors, 0.95);
    const auto below = std::count_if(errors.begin(), errors.end(), [](double e) { return e < 3.0; });
    s.fraction_below_3deg = static_cast<double>(below) / static_cast<double>(errors.size());
  }
  if (flip_defined > 0) {
    s.flip_fraction = static_cast<double>(flips) / static_cast<double>(flip_defined);
  }
  return s;
}

RecoveryReport run_recovery(const SceneSpec& scene, const RecoveryConfig& cfg) {
  RecoveryReport report;
  const auto num_slots = static_cast<std::size_t>(cfg.num_views);

  // Objects outside the view-1 crop region never reach training.
  std::vector<SceneObject> active;
  for (const SceneObject& obj : scene.objects) {
    if (cfg.border_mode == BorderMode::kCrop) {
      const SceneSpec single{scene.side, {obj}, scene.seed};
      if (generate_view_pair(single, 0.0, BorderMode::kCrop).view1.empty()) {
        ++report.summary.filtered;
        continue;
      }
    }
    active.push_back(obj);
  }
  std::vector<ObjectSetup> setups(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    const HBox hb = active[i].gt_hbox();
    setups[i].object = &active[i];
    setups[i].scale = std::max(hb.w, hb.h);
  }

  RecoveryState state;
  state.locations = assign_locations(active, scene.side, cfg.locations);
  const std::size_t n_loc = state.locations.size();
  for (std::size_t l = 0; l < n_loc; ++l) {
    ObjectSetup& s = setups[static_cast<std::size_t>(state.locations[l].object_index)];
    s.locations.push_back(l);
    s.centerness_sum += state.locations[l].centerness;
  }
  double total_centerness = 0.0;
  for (const Location& loc : state.locations) total_centerness += loc.centerness;

  std::vector<Prediction> loc_preds(n_loc);
  for (std::size_t l = 0; l < n_loc; ++l) loc_preds[l].location = state.locations[l].position;
  const std::vector<Target> ws_targets = ws_targets_for(state.locations, active);
  std::vector<int> sources(n_loc);
  if (cfg.assigner == Assigner::kO2M) {
    sources = o2m_sources(loc_preds, ws_targets);
  } else {
    std::iota(sources.begin(), sources.end(), 0);
  }

  // Initialization, deterministic per object.
  state.ws_params.resize(n_loc);
  state.ss_offsets.assign(n_loc, std::vector<Offset>(num_slots, Offset{}));
  for (const ObjectSetup& s : setups) {
    const SceneObject& obj = *s.object;
    Rng rng(mix_seed(cfg.seed, 0x1417), static_cast<std::uint64_t>(obj.id));
    for (std::size_t l : s.locations) {
      RBox ws;
      if (cfg.init == InitMode::kSymmetric) {
        ws = symmetric_rbox(obj.gt_rbox);
      } else {
        ws = hbox_as_rbox(obj.gt_hbox());
        ws.theta = rng.uniform(-cfg.init_angle_noise, cfg.init_angle_noise);
      }
      state.ws_params[l] = ws;
    }
  }

  // Sampled views, redrawn every step from (seed, object id, step, slot).
  std::vector<std::vector<SlotView>> views(setups.size(), std::vector<SlotView>(num_slots));
  const auto sample_views = [&](int step) {
    for (std::size_t o = 0; o < setups.size(); ++o) {
      const SceneObject& obj = *setups[o].object;
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(obj.id)),
              static_cast<std::uint64_t>(step));
      for (std::size_t k = 0; k < num_slots; ++k) {
        const double dtheta = sample_delta_theta(rng, cfg.delta_theta);
        const SceneSpec single{scene.side, {obj}, scene.seed};
        const ViewPair pair = generate_view_pair(single, dtheta, cfg.border_mode);
        SlotView& v = views[o][k];
        v.rotation = pair.rotation;
        v.present = !pair.view1.empty();
        v.valid = v.present && pair.valid_mask[0];
        if (v.present) v.view2_hbox = pair.view2[0].gt_hbox();
      }
    }
  };

  const std::size_t n_params = kParamsPerBox * (1 + num_slots);
  std::vector<std::vector<double>> rms(n_loc, std::vector<double>(1 + num_slots, 0.0));
  std::vector<std::vector<double>> grads(n_loc, std::vector<double>(n_params, 0.0));
  std::vector<std::array<double, 5>> source_grads(n_loc);
  std::vector<double> raw_loss(n_loc, 0.0);
  const double min_size = cfg.min_size_fraction * scene.side;

  // Per-location objective and gradient against a frozen snapshot of all
  // parameters; results depend only on the snapshot, not on scheduling.
  using J = ceres::Jet<double, 15>;
  const auto evaluate_location = [&](std::size_t l) {
    const Location& loc = state.locations[l];
    const auto o = static_cast<std::size_t>(loc.object_index);
    const ObjectSetup& s = setups[o];
    const SceneObject& obj = *s.object;
    std::vector<double>& g = grads[l];
    std::fill(g.begin(), g.end(), 0.0);
    source_grads[l].fill(0.0);
    const auto src = static_cast<std::size_t>(sources[l]);
    const RBox& w0 = state.ws_params[l];
    const RBox& s0 = state.ws_params[src];
    const kernels::Box<J> ws{J(w0.cx, 0), J(w0.cy, 1), J(w0.w, 2), J(w0.h, 3), J(w0.theta, 4)};
    const kernels::Box<J> other{J(s0.cx, 10), J(s0.cy, 11), J(s0.w, 12), J(s0.h, 13),
                                J(s0.theta, 14)};
    const kernels::Box<J>& source = src == l ? ws : other;
    const double weight = loc.centerness / (s.centerness_sum * static_cast<double>(num_slots));
    double raw = 0.0;
    for (std::size_t k = 0; k < num_slots; ++k) {
      const SlotView& view = views[o][k];
      if (!view.present) continue;
      const Offset& d = state.ss_offsets[l][k];
      const kernels::Box<J> shifted{ws.cx + J(d[0], 5), ws.cy + J(d[1], 6), ws.w + J(d[2], 7),
                                    ws.h + J(d[3], 8), ws.theta + J(d[4], 9)};
      // An isotropic object looks the same in every view, so its prediction
      // moves with the view but does not turn with it.
      kernels::Box<J> ss = kernels::rotate(shifted, view.rotation);
      if (obj.circular) ss.theta = shifted.theta;
      const bool view2_used = cfg.ss_enabled && view.valid;
      PairTerms terms;
      terms.view1_hbox = obj.gt_hbox();
      if (view2_used && cfg.ws_on_view2) terms.view2_hbox = view.view2_hbox;
      terms.rotation = view.rotation;
      terms.ss_active = view2_used && !(cfg.s1_mask_circular && obj.circular);
      terms.stop_grad_target = cfg.stop_grad_target;
      terms.iou_kind = cfg.iou_kind;
      const J v = pair_total_loss(ws, ss, source, terms, cfg.weights);
      raw += v.a / static_cast<double>(num_slots);
      for (int i = 0; i < kParamsPerBox; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        g[ui] += weight * v.v[i];
        g[kParamsPerBox * (1 + k) + ui] += weight * v.v[5 + i];
        source_grads[l][ui] += weight * v.v[10 + i];
      }
    }
    raw_loss[l] = raw;
  };

  const auto evaluate_all = [&] {
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads),
                                               std::max<std::size_t>(n_loc, 1));
    if (threads <= 1) {
      for (std::size_t l = 0; l < n_loc; ++l) evaluate_location(l);
      return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_loc + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        const std::size_t end = std::min(n_loc, (t + 1) * chunk);
        for (std::size_t l = t * chunk; l < end; ++l) evaluate_location(l);
      });
    }
  };

  const auto object_loss = [&](const ObjectSetup& s) {
    double acc = 0.0;
    for (std::size_t l : s.locations) acc += state.locations[l].centerness * raw_loss[l];
    return acc / s.centerness_sum;
  };
  const auto scene_loss = [&] {
    double acc = 0.0;
    for (std::size_t l = 0; l < n_loc; ++l) acc += state.locations[l].centerness * raw_loss[l];
    return n_loc ? acc / total_centerness : 0.0;
  };

  std::vector<std::vector<double>> traces(setups.size());
  const auto record_trace = [&](int step) {
    report.curve_steps.push_back(step);
    report.loss_curve.push_back(scene_loss());
    for (std::size_t o = 0; o < setups.size(); ++o) traces[o].push_back(object_loss(setups[o]));
  };

  for (int step = 0; step < cfg.steps && n_loc > 0; ++step) {
    sample_views(step);
    evaluate_all();
    if (step % cfg.trace_every == 0) record_trace(step);
    const bool finite = std::all_of(raw_loss.begin(), raw_loss.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) {
      report.diverged = true;
      break;
    }
    if (!cfg.stop_grad_target) {
      for (std::size_t l = 0; l < n_loc; ++l) {
        const auto src = static_cast<std::size_t>(sources[l]);
        if (src == l) continue;
        for (int i = 0; i < kParamsPerBox; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          grads[src][ui] += source_grads[l][ui];
        }
      }
    }

    const double progress = static_cast<double>(step) / static_cast<double>(cfg.steps);
    const double decay = 0.5 * (1.0 + std::cos(kPi * progress));
    const double lr =
        cfg.step_size * (cfg.final_lr_fraction + (1.0 - cfg.final_lr_fraction) * decay);
    const double bias = 1.0 - std::pow(cfg.rms_decay, step + 1);
    for (std::size_t l = 0; l < n_loc; ++l) {
      const ObjectSetup& s = setups[static_cast<std::size_t>(state.locations[l].object_index)];
      // One running RMS per box over its normalized components.
      const auto step_box = [&](std::size_t base, double* const* params) {
        std::array<double, kParamsPerBox> gn{};
        double sq = 0.0;
        for (int i = 0; i < kParamsPerBox; ++i) {
          const double unit = i == 4 ? 1.0 : s.scale;
          gn[static_cast<std::size_t>(i)] = grads[l][base + static_cast<std::size_t>(i)] * unit;
          sq += gn[static_cast<std::size_t>(i)] * gn[static_cast<std::size_t>(i)];
        }
        double& v = rms[l][base / kParamsPerBox];
        v = cfg.rms_decay * v + (1.0 - cfg.rms_decay) * sq / kParamsPerBox;
        const double denom = std::sqrt(v / bias) + cfg.rms_eps;
        for (int i = 0; i < kParamsPerBox; ++i) {
          const double unit = i == 4 ? 1.0 : s.scale;
          *params[i] -= lr * gn[static_cast<std::size_t>(i)] / denom * unit;
        }
      };
      RBox& ws = state.ws_params[l];
      double* const wp[kParamsPerBox] = {&ws.cx, &ws.cy, &ws.w, &ws.h, &ws.theta};
      step_box(0, wp);
      ws.w = std::max(ws.w, min_size);
      ws.h = std::max(ws.h, min_size);
      for (std::size_t k = 0; k < num_slots; ++k) {
        Offset& d = state.ss_offsets[l][k];
        double* const dp[kParamsPerBox] = {&d[0], &d[1], &d[2], &d[3], &d[4]};
        step_box(kParamsPerBox * (1 + k), dp);
        d[2] = std::max(d[2], min_size - ws.w);
        d[3] = std::max(d[3], min_size - ws.h);
      }
    }
    report.steps_run = step + 1;
  }

  if (n_loc > 0 && !report.diverged) {
    sample_views(report.steps_run);
    evaluate_all();
    record_trace(report.steps_run);
    report.diverged = !std::isfinite(report.loss_curve.back());
  }

  for (std::size_t o = 0; o < setups.size(); ++o) {
    const ObjectSetup& s = setups[o];
    const SceneObject& obj = *s.object;
    std::size_t best = s.locations.front();
    for (std::size_t l : s.locations) {
      if (state.locations[l].centerness > state.locations[best].centerness) best = l;
    }
    ObjectOutcome out;
    out.object_id = obj.id;
    out.class_id = obj.class_id;
    out.circular = obj.circular;
    out.gt = obj.gt_rbox;
    const RBox raw = state.ws_params[best];
    out.pred = {raw.cx, raw.cy, raw.w, raw.h, angle_normalize(raw.theta)};
    out.final_loss = object_loss(s);
    out.loss_trace = std::move(traces[o]);
    report.objects.push_back(std::move(out));
  }
  apply_output_strategy(report, cfg.s2_output_hbox_circular, cfg.flip_tau);
  return report;
}

void apply_output_strategy(RecoveryReport& report, bool s2_output_hbox_circular, double flip_tau) {
  for (ObjectOutcome& out : report.objects) {
    out.output = s2_output_hbox_circular && out.circular
                     ? hbox_as_rbox(circumscribed_hbox(out.pred))
                     : out.pred;
    out.angle_error_deg = angle_error(out.pred, out.gt);
    out.flipped.reset();
    if (!out.circular) out.flipped = is_flipped(out.pred, out.gt, flip_tau);
    out.iou = out.pred.valid() ? rbox_iou(out.output, out.gt) : 0.0;
  }
  const std::size_t filtered = report.summary.filtered;
  report.summary = summarize(report.objects);
  report.summary.filtered = filtered;
}

}  // namespace h2rbox
