#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "h2rbox/geometry.hpp"
#include "h2rbox/losses.hpp"
#include "h2rbox/random.hpp"

namespace h2rbox {

struct SceneObject {
  int id = 0;
  RBox gt_rbox;
  int class_id = 1;
  /// Isotropic class (storage tank, roundabout): annotated as a horizontal
  /// square in every view.
  bool circular = false;

  HBox gt_hbox() const { return circumscribed_hbox(gt_rbox); }
  bool valid() const;
};

struct SceneSpec {
  double side = 1000.0;
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;

  Point center() const { return {0.5 * side, 0.5 * side}; }
  bool valid() const;
};

enum class Placement {
  /// Centers uniform in the square inset by `margin`.
  kSquare,
  /// Centers uniform in the disc of radius side/2 - margin, which stays in
  /// frame under every view rotation.
  kDisc,
};

struct SceneGenConfig {
  double side = 1000.0;
  int count = 200;
  /// Long-side length range.
  double min_size = 30.0;
  double max_size = 90.0;
  /// Long side over short side.
  double aspect_min = 1.5;
  double aspect_max = 3.0;
  /// |theta| range of non-circular objects; the sign is random.
  double abs_theta_min = deg_to_rad(30.0);
  double abs_theta_max = deg_to_rad(60.0);
  double circular_fraction = 0.0;
  int circular_class = 2;
  /// Center distance to the image border.
  double margin = 60.0;
  Placement placement = Placement::kSquare;
  /// Minimum center-to-center distance; 0 disables the check.
  double min_separation = 0.0;
  std::uint64_t seed = 0;
};

/// Deterministic synthetic scene from (config, seed).
SceneSpec generate_scene(const SceneGenConfig& cfg);

enum class BorderMode { kCrop, kPad };

std::string_view to_string(BorderMode m);

/// View 1 is the scene itself; view 2 the scene rotated about its center.
/// view1[i] and view2[i] describe the same object.
struct ViewPair {
  ViewRotation rotation;
  BorderMode mode = BorderMode::kPad;
  std::vector<SceneObject> view1;
  std::vector<SceneObject> view2;
  /// Per view-2 object; false when it lies in the invalid border region.
  std::vector<bool> valid_mask;
};

/// The object as annotated after rotating the view: rotated box for ordinary
/// objects, horizontal square at the rotated center for circular ones.
SceneObject rotate_object(const SceneObject& obj, const ViewRotation& v);

ViewPair generate_view_pair(const SceneSpec& scene, double delta_theta, BorderMode mode);

/// Rotation of a WS prediction into the SS view (alias of rotate_rbox).
RBox transform_target(const RBox& rbox_ws, const ViewRotation& v);

/// SS targets: the WS prediction at each location, rotated to (x*, y*).
std::vector<Target> reassign_o2o(std::span<const Prediction> ws_preds,
                                 std::span<const Target> ws_targets, const ViewPair& pair);

/// For every positive location, the index of the WS prediction whose location
/// is nearest the center of the location's GT HBox (lowest index on ties).
std::vector<int> o2m_sources(std::span<const Prediction> ws_preds,
                             std::span<const Target> ws_targets);

/// SS targets: the WS prediction nearest the GT HBox center, rotated.
std::vector<Target> reassign_o2m(std::span<const Prediction> ws_preds,
                                 std::span<const Target> ws_targets, const ViewPair& pair);

/// Dense prediction locations standing in for a detector's feature-map points.
struct LocationConfig {
  /// 0 places exactly one location at each object's center.
  double stride = 0.0;
  /// Center-sampling radius in strides.
  double radius = 1.5;
};

struct Location {
  Point position;
  int object_index = -1;
  double centerness = 1.0;
};

/// Positive locations for the given objects. Grid points inside an object's
/// HBox and center region become positive; ambiguous points go to the smallest
/// object. Objects left without a location get one at their center.
std::vector<Location> assign_locations(std::span<const SceneObject> objects, double side,
                                       const LocationConfig& cfg);

/// WS-branch targets for locations in view 1.
std::vector<Target> ws_targets_for(std::span<const Location> locations,
                                   std::span<const SceneObject> objects);

/// View-rotation sampling: uniform on [-pi, pi) outside +-exclusion around
/// every multiple of pi/2.
struct DeltaThetaSampling {
  double exclusion = deg_to_rad(2.0);
};

double sample_delta_theta(Rng& rng, const DeltaThetaSampling& cfg = {});

}  // namespace h2rbox
