#include "h2rbox/views_assign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace h2rbox {

bool SceneObject::valid() const {
  if (!gt_rbox.valid()) return false;
  return !circular || gt_rbox.w == gt_rbox.h;
}

bool SceneSpec::valid() const {
  if (!(side > 0.0) || !std::isfinite(side)) return false;
  return std::all_of(objects.begin(), objects.end(), [&](const SceneObject& o) {
    return o.valid() && o.gt_rbox.cx >= 0.0 && o.gt_rbox.cx <= side && o.gt_rbox.cy >= 0.0 &&
           o.gt_rbox.cy <= side;
  });
}

SceneSpec generate_scene(const SceneGenConfig& cfg) {
  SceneSpec scene;
  scene.side = cfg.side;
  scene.seed = cfg.seed;
  Rng rng(cfg.seed, 0x5CE4E);
  const double lo = std::min(cfg.margin, 0.5 * cfg.side);
  const double hi = cfg.side - lo;
  constexpr int kMaxTries = 200;
  for (int i = 0; i < cfg.count; ++i) {
    Point c{};
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      if (cfg.placement == Placement::kDisc) {
        const double radius = std::max(0.0, 0.5 * cfg.side - cfg.margin);
        const double r = radius * std::sqrt(rng.uniform());
        const double a = rng.uniform(-kPi, kPi);
        c = {0.5 * cfg.side + r * std::cos(a), 0.5 * cfg.side + r * std::sin(a)};
      } else {
        c = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
      }
      if (cfg.min_separation <= 0.0) break;
      const bool clear = std::none_of(
          scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
            return distance(o.gt_rbox.center(), c) < cfg.min_separation;
          });
      if (clear) break;
    }
    SceneObject obj;
    obj.id = i;
    const double size = rng.uniform(cfg.min_size, cfg.max_size);
    if (rng.bernoulli(cfg.circular_fraction)) {
      obj.circular = true;
      obj.class_id = cfg.circular_class;
      obj.gt_rbox = {c.x, c.y, size, size, 0.0};
    } else {
      const double aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max);
      const double magnitude = rng.uniform(cfg.abs_theta_min, cfg.abs_theta_max);
      const double theta = rng.bernoulli(0.5) ? magnitude : -magnitude;
      obj.class_id = 1;
      obj.gt_rbox = {c.x, c.y, size, size / aspect, angle_normalize(theta)};
    }
    scene.objects.push_back(obj);
  }
  return scene;
}

std::string_view to_string(BorderMode m) { return m == BorderMode::kCrop ? "crop" : "pad"; }

SceneObject rotate_object(const SceneObject& obj, const ViewRotation& v) {
  SceneObject out = obj;
  if (obj.circular) {
    const Point c = v.apply(obj.gt_rbox.center());
    out.gt_rbox.cx = c.x;
    out.gt_rbox.cy = c.y;
  } else {
    out.gt_rbox = rotate_rbox(obj.gt_rbox, v);
  }
  return out;
}

ViewPair generate_view_pair(const SceneSpec& scene, double delta_theta, BorderMode mode) {
  ViewPair pair;
  pair.mode = mode;
  pair.rotation = ViewRotation(delta_theta, scene.center());
  const Point c = scene.center();
  const double side = scene.side;

  if (mode == BorderMode::kCrop) {
    const double half = 0.25 * std::sqrt(2.0) * side;
    const auto in_crop = [&](Point p) {
      return std::abs(p.x - c.x) <= half && std::abs(p.y - c.y) <= half;
    };
    for (const SceneObject& obj : scene.objects) {
      const SceneObject rotated = rotate_object(obj, pair.rotation);
      if (!in_crop(obj.gt_rbox.center()) || !in_crop(rotated.gt_rbox.center())) continue;
      pair.view1.push_back(obj);
      pair.view2.push_back(rotated);
      pair.valid_mask.push_back(true);
    }
    return pair;
  }

  const auto in_frame = [&](Point p) {
    return p.x >= 0.0 && p.x <= side && p.y >= 0.0 && p.y <= side;
  };
  const ViewRotation back = pair.rotation.inverse();
  for (const SceneObject& obj : scene.objects) {
    const SceneObject rotated = rotate_object(obj, pair.rotation);
    const Point at = rotated.gt_rbox.center();
    pair.view1.push_back(obj);
    pair.view2.push_back(rotated);
    pair.valid_mask.push_back(in_frame(at) && in_frame(back.apply(at)));
  }
  return pair;
}

RBox transform_target(const RBox& rbox_ws, const ViewRotation& v) {
  return rotate_rbox(rbox_ws, v);
}

namespace {

bool pair_valid(const ViewPair& pair, int object_index) {
  if (object_index < 0) return true;
  const auto i = static_cast<std::size_t>(object_index);
  return i < pair.valid_mask.size() && pair.valid_mask[i];
}

std::vector<Target> reassign_from(std::span<const Prediction> ws_preds,
                                  std::span<const Target> ws_targets, const ViewPair& pair,
                                  std::span<const int> sources) {
  std::vector<Target> out;
  const std::size_t n = std::min(ws_preds.size(), ws_targets.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Target t = ws_targets[i];
    t.location = rotate_point(ws_preds[i].location, pair.rotation);
    t.valid = t.valid && pair_valid(pair, t.object_index);
    if (t.class_id > 0) {
      const auto src = static_cast<std::size_t>(sources[i]);
      t.target_rbox = transform_target(ws_preds[src].rbox, pair.rotation);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<Target> reassign_o2o(std::span<const Prediction> ws_preds,
                                 std::span<const Target> ws_targets, const ViewPair& pair) {
  std::vector<int> self(std::min(ws_preds.size(), ws_targets.size()));
  for (std::size_t i = 0; i < self.size(); ++i) self[i] = static_cast<int>(i);
  return reassign_from(ws_preds, ws_targets, pair, self);
}

std::vector<int> o2m_sources(std::span<const Prediction> ws_preds,
                             std::span<const Target> ws_targets) {
  const std::size_t n = std::min(ws_preds.size(), ws_targets.size());
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(i);
    if (ws_targets[i].class_id <= 0) continue;
    const Point center = ws_targets[i].gt_hbox.center();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (ws_targets[j].class_id <= 0) continue;
      const double d = distance(ws_preds[j].location, center);
      if (d < best) {
        best = d;
        out[i] = static_cast<int>(j);
      }
    }
  }
  return out;
}

std::vector<Target> reassign_o2m(std::span<const Prediction> ws_preds,
                                 std::span<const Target> ws_targets, const ViewPair& pair) {
  const std::vector<int> sources = o2m_sources(ws_preds, ws_targets);
  return reassign_from(ws_preds, ws_targets, pair, sources);
}

namespace {

double fcos_centerness(Point p, const HBox& b) {
  const double l = p.x - b.x1();
  const double r = b.x2() - p.x;
  const double t = p.y - b.y1();
  const double d = b.y2() - p.y;
  if (l <= 0 || r <= 0 || t <= 0 || d <= 0) return 0.0;
  return std::sqrt(std::min(l, r) / std::max(l, r) * std::min(t, d) / std::max(t, d));
}

}  // namespace

std::vector<Location> assign_locations(std::span<const SceneObject> objects, double side,
                                       const LocationConfig& cfg) {
  std::vector<Location> out;
  std::vector<bool> covered(objects.size(), false);
  if (cfg.stride > 0.0) {
    const double stride = cfg.stride;
    const double reach = cfg.radius * stride;
    const auto cells = static_cast<long>(std::ceil(side / stride));
    // (row, col) -> (area, object index); std::map keeps grid order.
    std::map<std::pair<long, long>, std::pair<double, int>> owner;
    for (std::size_t k = 0; k < objects.size(); ++k) {
      const HBox hb = objects[k].gt_hbox();
      const Point c = hb.center();
      const double x1 = std::max(hb.x1(), c.x - reach);
      const double x2 = std::min(hb.x2(), c.x + reach);
      const double y1 = std::max(hb.y1(), c.y - reach);
      const double y2 = std::min(hb.y2(), c.y + reach);
      const long i1 = std::max(0L, static_cast<long>(std::ceil(y1 / stride - 0.5)));
      const long i2 = std::min(cells - 1, static_cast<long>(std::floor(y2 / stride - 0.5)));
      const long j1 = std::max(0L, static_cast<long>(std::ceil(x1 / stride - 0.5)));
      const long j2 = std::min(cells - 1, static_cast<long>(std::floor(x2 / stride - 0.5)));
      for (long i = i1; i <= i2; ++i) {
        for (long j = j1; j <= j2; ++j) {
          const std::pair<double, int> cand{hb.area(), static_cast<int>(k)};
          auto [it, inserted] = owner.emplace(std::pair{i, j}, cand);
          if (!inserted && cand < it->second) it->second = cand;
        }
      }
    }
    for (const auto& [cell, who] : owner) {
      const Point p{(static_cast<double>(cell.second) + 0.5) * stride,
                    (static_cast<double>(cell.first) + 0.5) * stride};
      const auto k = static_cast<std::size_t>(who.second);
      const double cn = fcos_centerness(p, objects[k].gt_hbox());
      if (cn <= 0.0) continue;
      out.push_back({p, who.second, cn});
      covered[k] = true;
    }
  }
  for (std::size_t k = 0; k < objects.size(); ++k) {
    if (!covered[k]) out.push_back({objects[k].gt_rbox.center(), static_cast<int>(k), 1.0});
  }
  return out;
}

std::vector<Target> ws_targets_for(std::span<const Location> locations,
                                   std::span<const SceneObject> objects) {
  std::vector<Target> out;
  out.reserve(locations.size());
  for (const Location& loc : locations) {
    Target t;
    t.location = loc.position;
    t.object_index = loc.object_index;
    if (loc.object_index >= 0) {
      const SceneObject& obj = objects[static_cast<std::size_t>(loc.object_index)];
      t.class_id = obj.class_id;
      t.centerness = loc.centerness;
      t.gt_hbox = obj.gt_hbox();
    }
    out.push_back(std::move(t));
  }
  return out;
}

double sample_delta_theta(Rng& rng, const DeltaThetaSampling& cfg) {
  const double quarter = 0.5 * kPi;
  for (;;) {
    const double x = rng.uniform(-kPi, kPi);
    const double nearest = std::round(x / quarter) * quarter;
    if (std::abs(x - nearest) >= cfg.exclusion) return x;
  }
}

}  // namespace h2rbox
