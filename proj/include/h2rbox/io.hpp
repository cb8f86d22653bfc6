#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2rbox/constraint_lab.hpp"
#include "h2rbox/eval_metrics.hpp"
#include "h2rbox/geometry.hpp"
#include "h2rbox/losses.hpp"
#include "h2rbox/oracles.hpp"
#include "h2rbox/recovery.hpp"
#include "h2rbox/views_assign.hpp"

namespace h2rbox {

using Json = nlohmann::ordered_json;

/// Malformed scene or config input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "%.9g"; non-finite values print as nan / inf / -inf.
std::string format_number(double v);
/// Value as it reads back from format_number. Non-finite values pass through.
double round9(double v);
/// JSON number rounded to 9 significant digits, null when non-finite.
Json json_number(double v);

Json to_json(const RBox& b);
Json to_json(const HBox& b);
Json to_json(const SceneObject& o);
Json to_json(const SceneSpec& s);
Json to_json(const LossWeights& w);

RBox rbox_from_json(const Json& j);
SceneSpec scene_from_json(const Json& j);

/// [{"id", "class_id", "score", "rbox"}, ...]
Json to_json(std::span<const Detection> dets);
std::vector<Detection> detections_from_json(const Json& j);
Json suite_json(const SuiteResult& r);

/// object_id, gt_theta_deg, pred_theta_deg, angle_err_deg, flipped, iou, final_loss.
std::string recovery_csv(const RecoveryReport& report);
Json recovery_summary_json(const RecoveryReport& report, const RecoveryConfig& cfg);

Json solution_set_json(const SolutionSet& s, ConstraintSet constraints);
Json eval_json(const EvalResult& r);
std::string eval_csv(const EvalResult& r);
/// {"ws": {"cls", "cn", "reg"}, "ss", "total", "weights"}.
Json loss_breakdown_json(const LossBreakdown& b);

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_scatter(const SvgSeries& points, const std::string& title,
                        const std::string& x_label, const std::string& y_label);
std::string svg_line(const SvgSeries& line, const std::string& title, const std::string& x_label,
                     const std::string& y_label);

/// Parses a file; throws InputError on I/O or syntax errors.
Json read_json_file(const std::string& path);
/// Creates parent directories as needed; throws std::runtime_error on failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace h2rbox
