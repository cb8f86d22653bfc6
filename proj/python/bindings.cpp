#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "h2rbox/ablation.hpp"
#include "h2rbox/constraint_lab.hpp"
#include "h2rbox/eval_metrics.hpp"
#include "h2rbox/geometry.hpp"
#include "h2rbox/io.hpp"
#include "h2rbox/losses.hpp"
#include "h2rbox/oracles.hpp"
#include "h2rbox/recovery.hpp"
#include "h2rbox/views_assign.hpp"

namespace py = pybind11;
using namespace h2rbox;

namespace {

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError(e.what());
  }
}

template <class E>
E enum_value(const Json& v, std::initializer_list<E> values) {
  const std::string s = v.get<std::string>();
  for (E e : values) {
    if (to_string(e) == s) return e;
  }
  throw InputError("unknown value '" + s + "'");
}

RecoveryConfig config_from_json(const Json& j) {
  RecoveryConfig c;
  if (!j.is_object()) throw InputError("config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const Json& v = it.value();
    if (k == "steps") c.steps = v.get<int>();
    else if (k == "step_size") c.step_size = v.get<double>();
    else if (k == "num_views") c.num_views = v.get<int>();
    else if (k == "ss_enabled") c.ss_enabled = v.get<bool>();
    else if (k == "ws_on_view2") c.ws_on_view2 = v.get<bool>();
    else if (k == "assigner") c.assigner = enum_value(v, {Assigner::kO2O, Assigner::kO2M});
    else if (k == "border_mode") c.border_mode = enum_value(v, {BorderMode::kCrop, BorderMode::kPad});
    else if (k == "init") c.init = enum_value(v, {InitMode::kHorizontal, InitMode::kSymmetric});
    else if (k == "s1_mask_circular") c.s1_mask_circular = v.get<bool>();
    else if (k == "s2_output_hbox_circular") c.s2_output_hbox_circular = v.get<bool>();
    else if (k == "stop_grad_target") c.stop_grad_target = v.get<bool>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "stride") c.locations.stride = v.get<double>();
    else if (k == "lambda") c.weights.lambda = v.get<double>();
    else if (k == "gamma1") c.weights.gamma1 = v.get<double>();
    else if (k == "gamma2") c.weights.gamma2 = v.get<double>();
    else if (k == "threads") c.threads = v.get<int>();
    else throw InputError("unknown config key '" + k + "'");
  }
  if (const std::string problem = c.validate(); !problem.empty()) throw InputError(problem);
  return c;
}

Json report_json(const RecoveryReport& report, const RecoveryConfig& cfg) {
  Json out = recovery_summary_json(report, cfg);
  Json objects = Json::array();
  for (const ObjectOutcome& o : report.objects) {
    Json flipped = nullptr;
    if (o.flipped) flipped = *o.flipped;
    objects.push_back(Json{{"id", o.object_id},
                           {"class_id", o.class_id},
                           {"circular", o.circular},
                           {"gt", to_json(o.gt)},
                           {"pred", to_json(o.pred)},
                           {"angle_err_deg", json_number(o.angle_error_deg)},
                           {"flipped", flipped},
                           {"iou", json_number(o.iou)},
                           {"final_loss", json_number(o.final_loss)}});
  }
  out["objects"] = std::move(objects);
  return out;
}

}  // namespace

PYBIND11_MODULE(_h2rbox, m) {
  m.doc() = "Rotated boxes from horizontal-box supervision";
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<RBox>(m, "RBox")
      .def(py::init<double, double, double, double, double>(), py::arg("cx"), py::arg("cy"),
           py::arg("w"), py::arg("h"), py::arg("theta"))
      .def_readwrite("cx", &RBox::cx)
      .def_readwrite("cy", &RBox::cy)
      .def_readwrite("w", &RBox::w)
      .def_readwrite("h", &RBox::h)
      .def_readwrite("theta", &RBox::theta)
      .def("valid", &RBox::valid)
      .def("__repr__", [](const RBox& b) {
        return "RBox(" + format_number(b.cx) + ", " + format_number(b.cy) + ", " +
               format_number(b.w) + ", " + format_number(b.h) + ", " + format_number(b.theta) +
               ")";
      });

  py::class_<HBox>(m, "HBox")
      .def(py::init<double, double, double, double>(), py::arg("cx"), py::arg("cy"),
           py::arg("w"), py::arg("h"))
      .def_readwrite("cx", &HBox::cx)
      .def_readwrite("cy", &HBox::cy)
      .def_readwrite("w", &HBox::w)
      .def_readwrite("h", &HBox::h)
      .def("area", &HBox::area)
      .def("__repr__", [](const HBox& b) {
        return "HBox(" + format_number(b.cx) + ", " + format_number(b.cy) + ", " +
               format_number(b.w) + ", " + format_number(b.h) + ")";
      });

  m.def("angle_normalize", &angle_normalize);
  m.def("rbox_iou", &rbox_iou);
  m.def("hbox_iou", &hbox_iou);
  m.def("circumscribed_hbox", &circumscribed_hbox);
  m.def("symmetric_rbox", &symmetric_rbox);
  m.def(
      "rotate_rbox",
      [](const RBox& b, double delta_theta, double cx, double cy) {
        return rotate_rbox(b, ViewRotation(delta_theta, {cx, cy}));
      },
      py::arg("box"), py::arg("delta_theta"), py::arg("cx") = 0.0, py::arg("cy") = 0.0);
  m.def(
      "monte_carlo_iou",
      [](const RBox& a, const RBox& b, std::size_t samples, std::uint64_t seed) {
        Rng rng(seed);
        return monte_carlo_iou(a, b, samples, rng);
      },
      py::arg("a"), py::arg("b"), py::arg("samples") = 1'000'000, py::arg("seed") = 0);

  m.def("circumscribed_dims", [](double w, double h, double theta) {
    const Dims d = circumscribed_dims(w, h, theta);
    return py::make_tuple(d.w, d.h);
  });
  m.def("solve_wh_given_theta", [](double W, double H, double theta) -> py::object {
    const WhSolution s = solve_wh_given_theta(W, H, theta);
    if (s.status != SolveStatus::kOk) return py::none();
    return py::make_tuple(s.w, s.h);
  });
  m.def(
      "_enumerate_feasible",
      [](std::pair<double, double> view1, std::pair<double, double> view2, double delta_theta,
         const std::string& constraints) {
        const auto set = ConstraintSet::parse(constraints);
        if (!set) throw InputError("unknown constraint set '" + constraints + "'");
        const ConstraintProblem p{{view1.first, view1.second},
                                  {view2.first, view2.second},
                                  delta_theta};
        if (!p.valid()) throw InputError("observed sizes must be positive and finite");
        return solution_set_json(enumerate_feasible(p, *set), *set).dump();
      },
      py::arg("view1"), py::arg("view2"), py::arg("delta_theta"), py::arg("constraints"));

  m.def("l_xy", [](const RBox& a, const RBox& b) { return l_xy(a, b); });
  m.def("l_wh_theta", [](const RBox& t, const RBox& p) { return l_wh_theta(t, p); });
  m.def("ss_reg_loss", [](const RBox& t, const RBox& p) { return ss_reg_loss(t, p, {}); });
  m.def("iou_reg_loss", [](const HBox& p, const HBox& g) { return iou_reg_loss(p, g); });

  m.def(
      "_generate_scene",
      [](int count, double side, std::uint64_t seed, double circular_fraction,
         const std::string& placement) {
        SceneGenConfig g;
        g.count = count;
        g.side = side;
        g.seed = seed;
        g.circular_fraction = circular_fraction;
        if (placement == "disc") g.placement = Placement::kDisc;
        else if (placement == "square") g.placement = Placement::kSquare;
        else throw InputError("placement must be 'disc' or 'square'");
        return to_json(generate_scene(g)).dump();
      },
      py::arg("count") = 200, py::arg("side") = 1000.0, py::arg("seed") = 0,
      py::arg("circular_fraction") = 0.0, py::arg("placement") = "disc");

  m.def("_run_recovery", [](const std::string& scene, const std::string& config) {
    const SceneSpec s = scene_from_json(parse(scene));
    const RecoveryConfig c = config_from_json(parse(config));
    RecoveryReport r;
    {
      py::gil_scoped_release release;
      r = run_recovery(s, c);
    }
    return report_json(r, c).dump();
  });

  m.def("_evaluate", [](const std::string& scene, const std::string& detections, bool s2) {
    const SceneSpec s = scene_from_json(parse(scene));
    const auto dets = detections_from_json(parse(detections));
    EvalConfig cfg;
    cfg.s2_output_hbox_circular = s2;
    return eval_json(evaluate(dets, s.objects, cfg)).dump();
  });

  m.def("_ablate", [](const std::string& scene, const std::string& config) {
    const SceneSpec s = scene_from_json(parse(scene));
    const RecoveryConfig c = config_from_json(parse(config));
    std::vector<AblationRow> rows;
    {
      py::gil_scoped_release release;
      rows = ablate(s, c);
    }
    return py::make_tuple(format_ablation_table(rows), ablation_csv(rows));
  });

  m.def(
      "check_iou",
      [](std::size_t pairs, std::size_t samples, std::uint64_t seed) {
        IouSuiteOptions o;
        o.pairs = pairs;
        o.samples = samples;
        o.seed = seed;
        return run_iou_suite(o).passed();
      },
      py::arg("pairs") = 50, py::arg("samples") = 1'000'000, py::arg("seed") = 0);
}
