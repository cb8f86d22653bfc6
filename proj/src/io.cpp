#include "h2rbox/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace h2rbox {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double round9(double v) {
  if (!std::isfinite(v)) return v;
  const double r = std::strtod(format_number(v).c_str(), nullptr);
  return r == 0.0 ? 0.0 : r;
}

Json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round9(v);
}

Json to_json(const RBox& b) {
  return Json{{"cx", json_number(b.cx)},
              {"cy", json_number(b.cy)},
              {"w", json_number(b.w)},
              {"h", json_number(b.h)},
              {"theta", json_number(b.theta)}};
}

Json to_json(const HBox& b) {
  return Json{{"cx", json_number(b.cx)},
              {"cy", json_number(b.cy)},
              {"w", json_number(b.w)},
              {"h", json_number(b.h)}};
}

Json to_json(const SceneObject& o) {
  return Json{{"id", o.id},
              {"class_id", o.class_id},
              {"circular", o.circular},
              {"rbox", to_json(o.gt_rbox)}};
}

Json to_json(const SceneSpec& s) {
  Json objects = Json::array();
  for (const SceneObject& o : s.objects) objects.push_back(to_json(o));
  return Json{{"side", json_number(s.side)}, {"seed", s.seed}, {"objects", std::move(objects)}};
}

Json to_json(const LossWeights& w) {
  return Json{{"mu1", json_number(w.mu1)},       {"mu2", json_number(w.mu2)},
              {"mu3", json_number(w.mu3)},       {"gamma1", json_number(w.gamma1)},
              {"gamma2", json_number(w.gamma2)}, {"lambda", json_number(w.lambda)}};
}

namespace {

double number_field(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InputError(std::string("missing or non-numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return it.key() == k; });
    if (!ok) throw InputError(std::string("unknown key '") + it.key() + "' in " + what);
  }
}

}  // namespace

RBox rbox_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("box must be an object");
  reject_unknown(j, {"cx", "cy", "w", "h", "theta"}, "box");
  const RBox b{number_field(j, "cx"), number_field(j, "cy"), number_field(j, "w"),
               number_field(j, "h"), number_field(j, "theta")};
  if (!b.valid()) throw InputError("box must have finite values and positive size");
  return b;
}

SceneSpec scene_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("scene must be an object");
  reject_unknown(j, {"side", "seed", "objects"}, "scene");
  SceneSpec s;
  s.side = number_field(j, "side");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw InputError("scene seed must be unsigned");
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  if (!j.contains("objects") || !j.at("objects").is_array()) {
    throw InputError("scene needs an 'objects' array");
  }
  int next_id = 0;
  for (const Json& o : j.at("objects")) {
    if (!o.is_object()) throw InputError("scene object must be an object");
    reject_unknown(o, {"id", "class_id", "circular", "rbox"}, "scene object");
    SceneObject obj;
    obj.id = o.contains("id") ? o.at("id").get<int>() : next_id;
    next_id = obj.id + 1;
    if (o.contains("class_id")) obj.class_id = o.at("class_id").get<int>();
    if (o.contains("circular")) obj.circular = o.at("circular").get<bool>();
    if (!o.contains("rbox")) throw InputError("scene object needs 'rbox'");
    obj.gt_rbox = rbox_from_json(o.at("rbox"));
    s.objects.push_back(obj);
  }
  if (!s.valid()) throw InputError("scene invalid: boxes must lie in frame, circles square");
  return s;
}

Json to_json(std::span<const Detection> dets) {
  Json out = Json::array();
  for (const Detection& d : dets) {
    out.push_back(Json{{"id", d.id},
                       {"class_id", d.class_id},
                       {"score", json_number(d.score)},
                       {"rbox", to_json(d.rbox)}});
  }
  return out;
}

std::vector<Detection> detections_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("detections must be an array");
  std::vector<Detection> out;
  for (const Json& d : j) {
    if (!d.is_object()) throw InputError("detection must be an object");
    reject_unknown(d, {"id", "class_id", "score", "rbox"}, "detection");
    Detection det;
    det.id = d.contains("id") ? d.at("id").get<int>() : static_cast<int>(out.size());
    if (d.contains("class_id")) det.class_id = d.at("class_id").get<int>();
    det.score = number_field(d, "score");
    if (!d.contains("rbox")) throw InputError("detection needs 'rbox'");
    det.rbox = rbox_from_json(d.at("rbox"));
    out.push_back(det);
  }
  return out;
}

Json suite_json(const SuiteResult& r) {
  return Json{{"suite", r.name},
              {"passed", r.passed()},
              {"cases", r.cases},
              {"failures", r.failures},
              {"rejected", r.rejected},
              {"worst", json_number(r.worst)},
              {"tolerance", json_number(r.tolerance)},
              {"messages", r.messages}};
}

std::string recovery_csv(const RecoveryReport& report) {
  std::ostringstream out;
  out << "object_id,gt_theta_deg,pred_theta_deg,angle_err_deg,flipped,iou,final_loss\n";
  for (const ObjectOutcome& o : report.objects) {
    out << o.object_id << ',' << format_number(rad_to_deg(o.gt.theta)) << ','
        << format_number(rad_to_deg(o.pred.theta)) << ',' << format_number(o.angle_error_deg)
        << ',' << (o.flipped ? (*o.flipped ? "true" : "false") : "") << ','
        << format_number(o.iou) << ',' << format_number(o.final_loss) << '\n';
  }
  return out.str();
}

Json recovery_summary_json(const RecoveryReport& report, const RecoveryConfig& cfg) {
  const RecoverySummary& s = report.summary;
  Json curve = Json::array();
  for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
    curve.push_back(Json{{"step", report.curve_steps[i]}, {"loss", json_number(report.loss_curve[i])}});
  }
  return Json{
      {"config",
       {{"steps", cfg.steps},
        {"step_size", json_number(cfg.step_size)},
        {"num_views", cfg.num_views},
        {"ss_enabled", cfg.ss_enabled},
        {"ws_on_view2", cfg.ws_on_view2},
        {"assigner", std::string(to_string(cfg.assigner))},
        {"border_mode", std::string(to_string(cfg.border_mode))},
        {"s1_mask_circular", cfg.s1_mask_circular},
        {"s2_output_hbox_circular", cfg.s2_output_hbox_circular},
        {"stop_grad_target", cfg.stop_grad_target},
        {"init", std::string(to_string(cfg.init))},
        {"seed", cfg.seed},
        {"weights", to_json(cfg.weights)}}},
      {"summary",
       {{"objects", s.objects},
        {"filtered", s.filtered},
        {"median_angle_err_deg", json_number(s.median_angle_error_deg)},
        {"p95_angle_err_deg", json_number(s.p95_angle_error_deg)},
        {"fraction_below_3deg", json_number(s.fraction_below_3deg)},
        {"flip_fraction", json_number(s.flip_fraction)},
        {"mean_iou", json_number(s.mean_iou)}}},
      {"diverged", report.diverged},
      {"steps_run", report.steps_run},
      {"loss_curve", std::move(curve)}};
}

Json solution_set_json(const SolutionSet& s, ConstraintSet constraints) {
  Json sols = Json::array();
  for (const Candidate& c : s.solutions) {
    sols.push_back(Json{{"w", json_number(c.w)},
                        {"h", json_number(c.h)},
                        {"theta", json_number(c.theta)},
                        {"theta_deg", json_number(rad_to_deg(c.theta))},
                        {"residual", json_number(c.residual)}});
  }
  Json skipped = Json::array();
  for (const AngleInterval& a : s.skipped) {
    skipped.push_back(Json{{"lo", json_number(a.lo)}, {"hi", json_number(a.hi)}});
  }
  Json out{{"constraints", constraints.name()},
           {"classification", std::string(to_string(s.classification))},
           {"solutions", std::move(sols)},
           {"grid_feasible", s.grid_feasible},
           {"tolerance", json_number(s.tolerance)},
           {"skipped", std::move(skipped)}};
  if (s.classification == Classification::kDegenerateSquare) {
    out["note"] = "square box: every angle fits both views";
  }
  return out;
}

Json eval_json(const EvalResult& r) {
  Json per_class = Json::object();
  for (const auto& [cls, cr] : r.per_class) {
    per_class[std::to_string(cls)] = Json{{"ap", json_number(cr.ap.ap)},
                                          {"ap50", json_number(cr.ap.ap50)},
                                          {"ap75", json_number(cr.ap.ap75)},
                                          {"num_gt", cr.num_gt},
                                          {"num_det", cr.num_det}};
  }
  return Json{{"ap", json_number(r.ap)},
              {"ap50", json_number(r.ap50)},
              {"ap75", json_number(r.ap75)},
              {"per_class", std::move(per_class)},
              {"angle",
               {{"count", r.angle.count},
                {"median_deg", json_number(r.angle.median_deg)},
                {"p95_deg", json_number(r.angle.p95_deg)},
                {"fraction_below_3deg", json_number(r.angle.fraction_below_3deg)}}}};
}

std::string eval_csv(const EvalResult& r) {
  std::ostringstream out;
  out << "class_id,num_gt,num_det,ap,ap50,ap75\n";
  for (const auto& [cls, cr] : r.per_class) {
    out << cls << ',' << cr.num_gt << ',' << cr.num_det << ',' << format_number(cr.ap.ap) << ','
        << format_number(cr.ap.ap50) << ',' << format_number(cr.ap.ap75) << '\n';
  }
  out << "all,,," << format_number(r.ap) << ',' << format_number(r.ap50) << ','
      << format_number(r.ap75) << '\n';
  return out.str();
}

Json loss_breakdown_json(const LossBreakdown& b) {
  return Json{{"ws",
               {{"cls", json_number(b.ws.cls)},
                {"cn", json_number(b.ws.cn)},
                {"reg", json_number(b.ws.reg)}}},
              {"ss", json_number(b.ss)},
              {"total", json_number(b.total)},
              {"weights", to_json(b.weights)}};
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kPad = 60.0;

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kPad + (x - x0) / (x1 - x0) * (kWidth - 2 * kPad); }
  double py(double y) const { return kHeight - kPad - (y - y0) / (y1 - y0) * (kHeight - 2 * kPad); }
};

Frame frame_for(const SvgSeries& s) {
  Frame f{0.0, 1.0, 0.0, 1.0};
  bool first = true;
  for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
    if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
    if (first) {
      f = {s.x[i], s.x[i], s.y[i], s.y[i]};
      first = false;
    }
    f.x0 = std::min(f.x0, s.x[i]);
    f.x1 = std::max(f.x1, s.x[i]);
    f.y0 = std::min(f.y0, s.y[i]);
    f.y1 = std::max(f.y1, s.y[i]);
  }
  if (f.x1 - f.x0 < 1e-12) f.x1 = f.x0 + 1.0;
  if (f.y1 - f.y0 < 1e-12) f.y1 = f.y0 + 1.0;
  return f;
}

std::string svg_frame(const Frame& f, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kWidth - 2 * kPad
      << "\" height=\"" << kHeight - 2 * kPad << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kPad / 2
      << "\" text-anchor=\"middle\" font-size=\"16\">" << escape_xml(title) << "</text>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape_xml(x_label) << "</text>\n";
  out << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 15 " << kHeight / 2 << ")\">" << escape_xml(y_label)
      << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    out << "<text x=\"" << format_number(f.px(xv)) << "\" y=\"" << kHeight - kPad + 16
        << "\" text-anchor=\"middle\" font-size=\"10\">" << format_number(round9(xv))
        << "</text>\n";
    out << "<text x=\"" << kPad - 6 << "\" y=\"" << format_number(f.py(yv))
        << "\" text-anchor=\"end\" font-size=\"10\">" << format_number(round9(yv)) << "</text>\n";
  }
  return out.str();
}

}  // namespace

std::string svg_scatter(const SvgSeries& points, const std::string& title,
                        const std::string& x_label, const std::string& y_label) {
  const Frame f = frame_for(points);
  std::ostringstream out;
  out << svg_frame(f, title, x_label, y_label);
  for (std::size_t i = 0; i < std::min(points.x.size(), points.y.size()); ++i) {
    if (!std::isfinite(points.x[i]) || !std::isfinite(points.y[i])) continue;
    out << "<circle cx=\"" << format_number(f.px(points.x[i])) << "\" cy=\""
        << format_number(f.py(points.y[i])) << "\" r=\"2.5\" fill=\"steelblue\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_line(const SvgSeries& line, const std::string& title, const std::string& x_label,
                     const std::string& y_label) {
  const Frame f = frame_for(line);
  std::ostringstream out;
  out << svg_frame(f, title, x_label, y_label);
  out << "<polyline fill=\"none\" stroke=\"firebrick\" stroke-width=\"1.5\" points=\"";
  bool first = true;
  for (std::size_t i = 0; i < std::min(line.x.size(), line.y.size()); ++i) {
    if (!std::isfinite(line.x[i]) || !std::isfinite(line.y[i])) continue;
    if (!first) out << ' ';
    out << format_number(f.px(line.x[i])) << ',' << format_number(f.py(line.y[i]));
    first = false;
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("invalid JSON in '" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace h2rbox
