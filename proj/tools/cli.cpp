#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "h2rbox/ablation.hpp"
#include "h2rbox/constraint_lab.hpp"
#include "h2rbox/eval_metrics.hpp"
#include "h2rbox/io.hpp"
#include "h2rbox/oracles.hpp"
#include "h2rbox/recovery.hpp"
#include "h2rbox/views_assign.hpp"

namespace h2rbox::cli {

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string config;
  int threads = 1;
};

struct SceneArgs {
  std::string path;
  std::optional<std::uint64_t> seed;
  SceneGenConfig gen{.placement = Placement::kDisc};
  double abs_theta_min_deg = 30.0;
  double abs_theta_max_deg = 60.0;
};

struct RecoveryArgs {
  RecoveryConfig cfg;
  std::string assigner = "o2o";
  std::string border = "pad";
  std::string init = "horizontal";
  double init_noise_deg = 5.0;
  double flip_tau_deg = 5.0;
  double exclusion_deg = 2.0;
  bool svg = false;
};

std::string path_in(const Globals& g, const std::string& name) {
  return (std::filesystem::path(g.out_dir) / name).string();
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

template <class E>
std::map<std::string, E> enum_map(std::initializer_list<E> values) {
  std::map<std::string, E> out;
  for (E v : values) out.emplace(std::string(to_string(v)), v);
  return out;
}

template <class E>
std::vector<std::string> names_of(const std::map<std::string, E>& m) {
  std::vector<std::string> out;
  for (const auto& kv : m) out.push_back(kv.first);
  return out;
}

template <class E>
E lookup(const std::map<std::string, E>& m, std::string key) {
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto it = m.find(key);
  if (it == m.end()) throw InputError("unknown value '" + key + "'");
  return it->second;
}

const auto kAssigners = enum_map({Assigner::kO2O, Assigner::kO2M});
const auto kBorders = enum_map({BorderMode::kCrop, BorderMode::kPad});
const auto kInits = enum_map({InitMode::kHorizontal, InitMode::kSymmetric});

void add_scene_options(CLI::App* sub, SceneArgs& a) {
  const char* group = "Scene";
  sub->add_option("--scene", a.path, "Scene JSON file (radians); overrides the generator")
      ->group(group)
      ->check(CLI::ExistingFile);
  sub->add_option("--scene-seed", a.seed, "Generator seed (default: --seed)")->group(group);
  sub->add_option("--count", a.gen.count, "Generated object count")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--side", a.gen.side, "Image side length")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--min-size", a.gen.min_size, "Smallest long side")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--max-size", a.gen.max_size, "Largest long side")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--aspect-min", a.gen.aspect_min, "Smallest aspect ratio")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--aspect-max", a.gen.aspect_max, "Largest aspect ratio")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--abs-theta-min", a.abs_theta_min_deg, "Smallest |angle|, degrees")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--abs-theta-max", a.abs_theta_max_deg, "Largest |angle|, degrees")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--circular-fraction", a.gen.circular_fraction, "Share of circular objects")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--circular-class", a.gen.circular_class, "Class id of circular objects")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--margin", a.gen.margin, "Center distance to the border")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--placement", a.gen.placement, "Center placement: square or disc")
      ->group(group)
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Placement>{{"square", Placement::kSquare},
                                           {"disc", Placement::kDisc}},
          CLI::ignore_case));
  sub->add_option("--min-separation", a.gen.min_separation, "Minimum center distance")
      ->group(group)
      ->capture_default_str();
}

void add_recovery_options(CLI::App* sub, RecoveryArgs& a) {
  RecoveryConfig& c = a.cfg;
  const char* group = "Recovery";
  sub->add_option("--steps", c.steps, "Optimization steps")->group(group)->capture_default_str();
  sub->add_option("--step-size", c.step_size, "Initial step size")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--views", c.num_views, "Rotated views per object")
      ->group(group)
      ->capture_default_str();
  sub->add_flag("--ss,!--no-ss", c.ss_enabled, "SS loss on or off (default on)")->group(group);
  sub->add_flag("--ws-on-view2,!--no-ws-on-view2", c.ws_on_view2,
                "HBox loss on the rotated view (default on)")
      ->group(group);
  sub->add_option("--assigner", a.assigner, "o2o or o2m")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::IsMember(names_of(kAssigners), CLI::ignore_case));
  sub->add_option("--border", a.border, "crop or pad")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::IsMember(names_of(kBorders), CLI::ignore_case));
  sub->add_flag("--s1", c.s1_mask_circular, "Mask the SS loss of circular objects")->group(group);
  sub->add_flag("--s2", c.s2_output_hbox_circular, "Output HBoxes for circular objects")
      ->group(group);
  sub->add_flag("--stop-grad", c.stop_grad_target, "Detach the SS target")->group(group);
  sub->add_option("--init", a.init, "horizontal or symmetric")
      ->group(group)
      ->capture_default_str()
      ->check(CLI::IsMember(names_of(kInits), CLI::ignore_case));
  sub->add_option("--init-noise", a.init_noise_deg, "Initial angle noise, degrees")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--stride", c.locations.stride, "Location grid stride (0: one per object)")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--radius", c.locations.radius, "Center-sampling radius in strides")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--lambda", c.weights.lambda, "SS loss weight")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--gamma1", c.weights.gamma1, "Center term weight")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--gamma2", c.weights.gamma2, "Shape/angle term weight")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--mu1", c.weights.mu1, "Classification weight")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--mu2", c.weights.mu2, "Center-ness weight")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--mu3", c.weights.mu3, "HBox regression weight")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--iou-loss", c.iou_kind, "neglog or one-minus")
      ->group(group)
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, IouLossKind>{{"neglog", IouLossKind::kNegLog},
                                             {"one-minus", IouLossKind::kOneMinus}},
          CLI::ignore_case));
  sub->add_option("--final-lr", c.final_lr_fraction, "Final step size as a fraction")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--flip-tau", a.flip_tau_deg, "Flip test dead zone, degrees")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--exclusion", a.exclusion_deg,
                  "View rotations avoid multiples of 90 by this many degrees")
      ->group(group)
      ->capture_default_str();
  sub->add_option("--trace-every", c.trace_every, "Loss curve sampling period")
      ->group(group)
      ->capture_default_str();
  sub->add_flag("--svg", a.svg, "Write SVG plots")->group(group);
}

SceneSpec load_scene(const SceneArgs& a, const Globals& g) {
  if (!a.path.empty()) return scene_from_json(read_json_file(a.path));
  SceneGenConfig gen = a.gen;
  gen.abs_theta_min = deg_to_rad(a.abs_theta_min_deg);
  gen.abs_theta_max = deg_to_rad(a.abs_theta_max_deg);
  gen.seed = a.seed.value_or(g.seed);
  if (!(gen.min_size > 0.0) || gen.max_size < gen.min_size || !(gen.aspect_min >= 1.0) ||
      gen.aspect_max < gen.aspect_min || gen.abs_theta_max < gen.abs_theta_min) {
    throw InputError("inconsistent generator ranges");
  }
  return generate_scene(gen);
}

RecoveryConfig make_config(const RecoveryArgs& a, const Globals& g) {
  RecoveryConfig c = a.cfg;
  c.assigner = lookup(kAssigners, a.assigner);
  c.border_mode = lookup(kBorders, a.border);
  c.init = lookup(kInits, a.init);
  c.seed = g.seed;
  c.threads = g.threads;
  c.init_angle_noise = deg_to_rad(a.init_noise_deg);
  c.flip_tau = deg_to_rad(a.flip_tau_deg);
  c.delta_theta.exclusion = deg_to_rad(a.exclusion_deg);
  if (const std::string problem = c.validate(); !problem.empty()) throw InputError(problem);
  return c;
}

std::vector<int> class_ids(const SceneSpec& scene) {
  std::set<int> ids;
  for (const SceneObject& o : scene.objects) ids.insert(o.class_id);
  return {ids.begin(), ids.end()};
}

std::string eval_table(const EvalResult& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %7s %7s %7s %7s %7s\n", "class", "num_gt", "num_det",
                "AP", "AP50", "AP75");
  out += line;
  for (const auto& [cls, cr] : r.per_class) {
    std::snprintf(line, sizeof line, "%-6d %7zu %7zu %7s %7s %7s\n", cls, cr.num_gt, cr.num_det,
                  fixed(100 * cr.ap.ap, 2).c_str(), fixed(100 * cr.ap.ap50, 2).c_str(),
                  fixed(100 * cr.ap.ap75, 2).c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "%-6s %7s %7s %7s %7s %7s\n", "all", "", "",
                fixed(100 * r.ap, 2).c_str(), fixed(100 * r.ap50, 2).c_str(),
                fixed(100 * r.ap75, 2).c_str());
  out += line;
  return out;
}

// ---- constraints ----

struct ConstraintArgs {
  double w = 4.0;
  double h = 2.0;
  double theta_deg = 30.0;
  double dtheta_deg = 25.0;
  std::vector<double> view1;
  std::vector<double> view2;
  std::vector<std::string> sets{"hcrc", "hcrc+sc", "hcrc+sc+ac"};
  double grid_step_deg = 0.25;
  bool svg = false;
};

void add_constraint_options(CLI::App* sub, ConstraintArgs& a) {
  sub->set_help_flag("--help", "Print this help message and exit");
  sub->add_option("--w", a.w, "Ground-truth width")->capture_default_str();
  sub->add_option("--h", a.h, "Ground-truth height")->capture_default_str();
  sub->add_option("--theta", a.theta_deg, "Ground-truth angle, degrees")->capture_default_str();
  sub->add_option("--dtheta", a.dtheta_deg, "View rotation, degrees")->capture_default_str();
  sub->add_option("--view1", a.view1, "Observed view-1 HBox size W H (replaces --w/--h/--theta)")
      ->expected(2);
  sub->add_option("--view2", a.view2, "Observed view-2 HBox size W H")->expected(2);
  sub->add_option("--sets", a.sets, "Constraint sets, comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember({"hcrc", "hcrc+sc", "hcrc+sc+ac"}, CLI::ignore_case));
  sub->add_option("--grid-step", a.grid_step_deg, "Angle sweep step, degrees")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_flag("--svg", a.svg, "Write residual curves");
}

int cmd_constraints(const ConstraintArgs& a, const Globals& g, std::ostream& out) {
  ConstraintProblem p;
  if (a.view1.empty() != a.view2.empty()) throw InputError("--view1 and --view2 go together");
  if (!a.view1.empty()) {
    p = {{a.view1[0], a.view1[1]}, {a.view2[0], a.view2[1]}, deg_to_rad(a.dtheta_deg)};
  } else {
    if (!(a.w > 0.0) || !(a.h > 0.0)) throw InputError("--w and --h must be positive");
    p = ConstraintProblem::from_ground_truth(a.w, a.h, deg_to_rad(a.theta_deg),
                                             deg_to_rad(a.dtheta_deg));
  }
  if (!p.valid()) throw InputError("observed sizes must be positive and finite");

  EnumerateOptions opts;
  opts.grid_step = deg_to_rad(a.grid_step_deg);
  Json report{{"problem",
               {{"view1", {json_number(p.view1.w), json_number(p.view1.h)}},
                {"view2", {json_number(p.view2.w), json_number(p.view2.h)}},
                {"delta_theta", json_number(p.delta_theta)}}},
              {"results", Json::array()}};
  bool none = false;
  for (const std::string& name : a.sets) {
    const ConstraintSet set = *ConstraintSet::parse(name);
    const SolutionSet s = enumerate_feasible(p, set, opts);
    report["results"].push_back(solution_set_json(s, set));
    none = none || s.classification == Classification::kEmpty;
    out << set.name() << ": " << to_string(s.classification);
    if (s.classification != Classification::kInfiniteFamily &&
        s.classification != Classification::kDegenerateSquare) {
      for (const Candidate& c : s.solutions) {
        out << "  (" << format_number(round9(c.w)) << ", " << format_number(round9(c.h)) << ", "
            << fixed(rad_to_deg(c.theta), 3) << " deg)";
      }
    }
    if (s.classification == Classification::kDegenerateSquare) out << "  note: square box";
    out << '\n';

    if (a.svg) {
      SvgSeries curve;
      const auto n = static_cast<int>(std::lround(180.0 / a.grid_step_deg));
      for (int i = 0; i < n; ++i) {
        const double theta = -0.5 * kPi + i * opts.grid_step;
        const WhSolution wh = solve_wh_given_theta(p.view1.w, p.view1.h, theta);
        if (wh.status != SolveStatus::kOk) continue;
        double r = view1_residual(p, wh.w, wh.h, theta);
        if (set.scale) r = std::max(r, scale_residual(p, wh.w, wh.h));
        if (set.angle) r = std::max(r, angle_residual(p, wh.w, wh.h, theta));
        curve.x.push_back(rad_to_deg(theta));
        curve.y.push_back(std::log10(r + 1e-12));
      }
      std::string file = set.name();
      std::replace(file.begin(), file.end(), '+', '_');
      write_text_file(path_in(g, "residual_" + file + ".svg"),
                      svg_line(curve, "residual " + set.name(), "theta (deg)", "log10 residual"));
    }
  }
  write_text_file(path_in(g, "constraints.json"), report.dump(2) + "\n");
  return none ? kNoSolution : kOk;
}

// ---- recover ----

int cmd_recover(const SceneArgs& sa, const RecoveryArgs& ra, const Globals& g,
                std::ostream& out) {
  const SceneSpec scene = load_scene(sa, g);
  const RecoveryConfig cfg = make_config(ra, g);
  const RecoveryReport report = run_recovery(scene, cfg);

  write_text_file(path_in(g, "scene.json"), to_json(scene).dump(2) + "\n");
  write_text_file(path_in(g, "recovery.csv"), recovery_csv(report));
  write_text_file(path_in(g, "recovery.json"),
                  recovery_summary_json(report, cfg).dump(2) + "\n");
  if (ra.svg) {
    SvgSeries scatter;
    for (const ObjectOutcome& o : report.objects) {
      if (o.circular) continue;
      scatter.x.push_back(rad_to_deg(canonical_rbox(o.gt).theta));
      scatter.y.push_back(rad_to_deg(canonical_rbox(o.pred).theta));
    }
    write_text_file(path_in(g, "angle_scatter.svg"),
                    svg_scatter(scatter, "recovered angle", "gt theta (deg)",
                                "pred theta (deg)"));
    SvgSeries curve;
    for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
      curve.x.push_back(report.curve_steps[i]);
      curve.y.push_back(report.loss_curve[i]);
    }
    write_text_file(path_in(g, "loss_curve.svg"), svg_line(curve, "loss", "step", "loss"));
  }

  const RecoverySummary& s = report.summary;
  out << "objects " << s.objects << " (filtered " << s.filtered << ")\n"
      << "median_err_deg " << fixed(s.median_angle_error_deg, 3) << "\n"
      << "p95_err_deg " << fixed(s.p95_angle_error_deg, 3) << "\n"
      << "below_3deg " << fixed(s.fraction_below_3deg, 3) << "\n"
      << "flip_fraction " << fixed(s.flip_fraction, 3) << "\n"
      << "mean_iou " << fixed(s.mean_iou, 4) << "\n";
  if (report.diverged) {
    out << "diverged at step " << report.steps_run << "\n";
    return kDiverged;
  }
  return kOk;
}

// ---- ablate ----

struct AblateArgs {
  std::vector<std::string> ss{"on", "off"};
  std::vector<std::string> assigners{"o2o", "o2m"};
  std::vector<std::string> borders{"crop", "pad"};
  bool circular_strategies = true;
};

void add_ablate_options(CLI::App* sub, AblateArgs& a) {
  const char* group = "Ablation";
  sub->add_option("--ss-set", a.ss, "SS settings to compare: on,off")
      ->group(group)
      ->delimiter(',')
      ->check(CLI::IsMember({"on", "off"}, CLI::ignore_case));
  sub->add_option("--assigners", a.assigners, "Assigners to compare: o2o,o2m")
      ->group(group)
      ->delimiter(',')
      ->check(CLI::IsMember(names_of(kAssigners), CLI::ignore_case));
  sub->add_option("--borders", a.borders, "Border modes to compare: crop,pad")
      ->group(group)
      ->delimiter(',')
      ->check(CLI::IsMember(names_of(kBorders), CLI::ignore_case));
  sub->add_flag("--circular-strategies,!--no-circular-strategies", a.circular_strategies,
                "Vary S1/S2 when the scene has circular objects (default on)")
      ->group(group);
}

int cmd_ablate(const SceneArgs& sa, const RecoveryArgs& ra, const AblateArgs& aa,
               const Globals& g, std::ostream& out) {
  const SceneSpec scene = load_scene(sa, g);
  const RecoveryConfig cfg = make_config(ra, g);
  AblationOptions opts;
  opts.ss.clear();
  for (const std::string& s : aa.ss) {
    opts.ss.push_back(lookup(std::map<std::string, bool>{{"on", true}, {"off", false}}, s));
  }
  opts.assigners.clear();
  for (const std::string& s : aa.assigners) opts.assigners.push_back(lookup(kAssigners, s));
  opts.borders.clear();
  for (const std::string& s : aa.borders) opts.borders.push_back(lookup(kBorders, s));
  opts.circular_strategies_auto = aa.circular_strategies;
  const std::vector<AblationRow> rows = ablate(scene, cfg, opts);
  const std::string table = format_ablation_table(rows, class_ids(scene));
  write_text_file(path_in(g, "ablation.txt"), table);
  write_text_file(path_in(g, "ablation.csv"), ablation_csv(rows));
  out << table;
  return kOk;
}

// ---- eval ----

struct EvalArgs {
  std::string detections;
  std::vector<int> circular_classes{2};
};

int cmd_eval(const SceneArgs& sa, const RecoveryArgs& ra, const EvalArgs& ea, const Globals& g,
             std::ostream& out) {
  const SceneSpec scene = load_scene(sa, g);
  EvalConfig ecfg;
  ecfg.circular_classes = ea.circular_classes;
  ecfg.s2_output_hbox_circular = ra.cfg.s2_output_hbox_circular;
  std::vector<Detection> dets;
  bool diverged = false;
  if (!ea.detections.empty()) {
    dets = detections_from_json(read_json_file(ea.detections));
  } else {
    const RecoveryReport report = run_recovery(scene, make_config(ra, g));
    diverged = report.diverged;
    dets = detections_from_report(report);
    write_text_file(path_in(g, "detections.json"), to_json(dets).dump(2) + "\n");
  }
  const EvalResult r = evaluate(dets, scene.objects, ecfg);
  write_text_file(path_in(g, "eval.json"), eval_json(r).dump(2) + "\n");
  write_text_file(path_in(g, "eval.csv"), eval_csv(r));
  out << eval_table(r);
  out << "angle median_deg " << fixed(r.angle.median_deg, 3) << " p95_deg "
      << fixed(r.angle.p95_deg, 3) << " below_3deg " << fixed(r.angle.fraction_below_3deg, 3)
      << "\n";
  return diverged ? kDiverged : kOk;
}

// ---- check ----

struct CheckArgs {
  std::vector<std::string> suites{"all"};
  std::size_t pairs = 50;
  std::size_t samples = 1'000'000;
  std::size_t configs = 1000;
  std::size_t problems = 100;
  bool inject_iou_bug = false;
};

void add_check_options(CLI::App* sub, CheckArgs& a) {
  sub->add_option("--suite", a.suites, "iou, gradient, constraints or all")
      ->delimiter(',')
      ->check(CLI::IsMember({"all", "iou", "gradient", "constraints"}, CLI::ignore_case));
  sub->add_option("--pairs", a.pairs, "Random box pairs for the IoU suite")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--samples", a.samples, "Monte-Carlo samples per pair")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--configs", a.configs, "Configurations for the gradient suite")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--problems", a.problems, "Problems for the constraint suite")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_flag("--inject-iou-bug", a.inject_iou_bug,
                "Test mode: replace rotated IoU with HBox IoU")
      ->group("Testing");
}

int cmd_check(const CheckArgs& a, const Globals& g, std::ostream& out) {
  const auto wanted = [&](const char* name) {
    return std::any_of(a.suites.begin(), a.suites.end(),
                       [&](const std::string& s) { return s == "all" || s == name; });
  };
  std::vector<SuiteResult> results;
  if (wanted("iou")) {
    IouSuiteOptions o;
    o.pairs = a.pairs;
    o.samples = a.samples;
    o.seed = g.seed;
    o.inject_bug = a.inject_iou_bug;
    o.threads = g.threads;
    results.push_back(run_iou_suite(o));
  }
  if (wanted("gradient")) {
    GradientSuiteOptions o;
    o.configs = a.configs;
    o.seed = g.seed;
    results.push_back(run_gradient_suite(o));
  }
  if (wanted("constraints")) {
    ConstraintSuiteOptions o;
    o.problems = a.problems;
    o.seed = g.seed;
    results.push_back(run_constraint_suite(o));
  }
  Json report = Json::array();
  bool ok = true;
  for (const SuiteResult& r : results) {
    ok = ok && r.passed();
    out << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.cases - r.failures << "/"
        << r.cases << " within " << format_number(r.tolerance) << ", worst "
        << format_number(round9(r.worst));
    if (r.rejected > 0) out << ", " << r.rejected << " near kinks skipped";
    out << '\n';
    for (const std::string& m : r.messages) out << "  " << m << '\n';
    report.push_back(suite_json(r));
  }
  write_text_file(path_in(g, "check.json"), report.dump(2) + "\n");
  return ok ? kOk : kCheckFailed;
}

/// Turns a flat JSON object into option tokens. Keys are long option names.
std::vector<std::string> config_tokens(const Json& j, const std::vector<std::string>& keys) {
  std::vector<std::string> out;
  for (const std::string& key : keys) {
    const Json& v = j.at(key);
    std::string text;
    if (v.is_boolean()) {
      text = v.get<bool>() ? "true" : "false";
    } else if (v.is_number_integer() || v.is_number_unsigned()) {
      text = v.dump();
    } else if (v.is_number()) {
      text = format_number(v.get<double>());
    } else if (v.is_string()) {
      text = v.get<std::string>();
    } else if (v.is_array()) {
      for (const Json& e : v) {
        if (!text.empty()) text += ',';
        text += e.is_string() ? e.get<std::string>() : e.dump();
      }
    } else {
      throw InputError("config key '" + key + "' has an unsupported value");
    }
    out.push_back("--" + key + "=" + text);
  }
  return out;
}

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotated-box recovery laboratory", "h2rbox_lab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for reports")->capture_default_str();
  app.add_option("--config", g.config, "JSON object of option values (degrees, like the flags)");
  app.add_option("--threads", g.threads, "Worker threads")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));

  ConstraintArgs constraint_args;
  auto* constraints = app.add_subcommand("constraints", "Feasible solutions per constraint set");
  add_constraint_options(constraints, constraint_args);

  SceneArgs scene_args;
  RecoveryArgs recovery_args;
  auto* recover = app.add_subcommand("recover", "Recover rotated boxes from HBox supervision");
  add_scene_options(recover, scene_args);
  add_recovery_options(recover, recovery_args);

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare switch settings on one scene");
  add_scene_options(ablate_cmd, scene_args);
  add_recovery_options(ablate_cmd, recovery_args);
  add_ablate_options(ablate_cmd, ablate_args);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "AP and angle statistics against a scene");
  add_scene_options(eval_cmd, scene_args);
  add_recovery_options(eval_cmd, recovery_args);
  eval_cmd->add_option("--detections", eval_args.detections,
                       "Detections JSON; without it a recovery run supplies them")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--circular-classes", eval_args.circular_classes,
                       "Class ids treated as circular")
      ->delimiter(',');

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "Oracle self-checks");
  add_check_options(check, check_args);

  std::vector<std::string> tokens = args;
  if (tokens.empty()) tokens.push_back("h2rbox_lab");
  try {
    if (const auto path = find_config_path(tokens)) {
      const Json cfg = read_json_file(*path);
      if (!cfg.is_object()) throw InputError("config must be a JSON object");
      // The subcommand is the first token naming one.
      CLI::App* sub = nullptr;
      std::size_t sub_pos = 0;
      for (std::size_t i = 1; i < tokens.size() && sub == nullptr; ++i) {
        for (CLI::App* s : app.get_subcommands({})) {
          if (s->get_name() == tokens[i]) {
            sub = s;
            sub_pos = i;
          }
        }
      }
      std::vector<std::string> global_keys;
      std::vector<std::string> sub_keys;
      for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        const std::string opt = "--" + it.key();
        if (it.key() == "config") throw InputError("config files cannot nest");
        if (sub != nullptr && sub->get_option_no_throw(opt) != nullptr) {
          sub_keys.push_back(it.key());
        } else if (app.get_option_no_throw(opt) != nullptr) {
          global_keys.push_back(it.key());
        } else {
          throw InputError("unknown config key '" + it.key() + "'");
        }
      }
      const auto sub_tokens = config_tokens(cfg, sub_keys);
      if (sub != nullptr) {
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
                      sub_tokens.begin(), sub_tokens.end());
      }
      const auto global_tokens = config_tokens(cfg, global_keys);
      tokens.insert(tokens.begin() + 1, global_tokens.begin(), global_tokens.end());
    }

    std::vector<const char*> argv;
    for (const std::string& t : tokens) argv.push_back(t.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (constraints->parsed()) return cmd_constraints(constraint_args, g, out);
    if (recover->parsed()) return cmd_recover(scene_args, recovery_args, g, out);
    if (ablate_cmd->parsed()) {
      return cmd_ablate(scene_args, recovery_args, ablate_args, g, out);
    }
    if (eval_cmd->parsed()) return cmd_eval(scene_args, recovery_args, eval_args, g, out);
    if (check->parsed()) return cmd_check(check_args, g, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace h2rbox::cli
