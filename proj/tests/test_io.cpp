#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "h2rbox/io.hpp"

using namespace h2rbox;

TEST(FormatNumber, NineSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_DOUBLE_EQ(round9(1.0 / 3.0), 0.333333333);
  EXPECT_TRUE(json_number(std::nan("")).is_null());
}

TEST(SceneJson, RoundTrip) {
  SceneGenConfig g;
  g.count = 10;
  g.circular_fraction = 0.3;
  g.seed = 3;
  const SceneSpec s = generate_scene(g);
  const SceneSpec back = scene_from_json(Json::parse(to_json(s).dump()));
  ASSERT_EQ(back.objects.size(), s.objects.size());
  EXPECT_DOUBLE_EQ(back.side, s.side);
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    EXPECT_EQ(back.objects[i].id, s.objects[i].id);
    EXPECT_EQ(back.objects[i].circular, s.objects[i].circular);
    EXPECT_EQ(back.objects[i].class_id, s.objects[i].class_id);
    EXPECT_NEAR(back.objects[i].gt_rbox.theta, s.objects[i].gt_rbox.theta, 1e-8);
    EXPECT_NEAR(back.objects[i].gt_rbox.w, s.objects[i].gt_rbox.w, 1e-6);
  }
}

TEST(SceneJson, RejectsBadInput) {
  EXPECT_THROW(scene_from_json(Json::parse(R"({"side": 100, "objects": [], "bogus": 1})")),
               InputError);
  EXPECT_THROW(
      scene_from_json(Json::parse(
          R"({"side": 100, "objects": [{"id": 0, "rbox": [50, 50, -1, 2, 0]}]})")),
      InputError);
  EXPECT_THROW(scene_from_json(Json::parse("[1, 2]")), InputError);
}

TEST(DetectionsJson, RoundTrip) {
  const std::vector<Detection> dets{{3, {1, 2, 3, 4, 0.5}, 0.25, 2}, {7, {5, 6, 7, 8, -1}, 1, 1}};
  const auto back = detections_from_json(Json::parse(to_json(dets).dump()));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].id, 3);
  EXPECT_EQ(back[0].class_id, 2);
  EXPECT_DOUBLE_EQ(back[0].score, 0.25);
  EXPECT_EQ(back[1].rbox, dets[1].rbox);
  EXPECT_THROW(detections_from_json(Json::parse(R"([{"id": 1, "rbox": [1,2,3,4,0], "x": 1}])")),
               InputError);
}

TEST(SolutionSetJson, Fields) {
  const auto p = ConstraintProblem::from_ground_truth(4, 2, deg_to_rad(30), deg_to_rad(25));
  const SolutionSet s = enumerate_feasible(p, {true, true});
  const Json j = solution_set_json(s, {true, true});
  EXPECT_EQ(j.at("classification"), "UNIQUE");
  EXPECT_EQ(j.at("solutions").size(), 1u);
}

TEST(RecoveryCsv, HeaderAndRows) {
  RecoveryReport r;
  ObjectOutcome o;
  o.object_id = 2;
  o.gt = {0, 0, 4, 2, deg_to_rad(30)};
  o.pred = o.gt;
  o.flipped = false;
  r.objects.push_back(o);
  const std::string csv = recovery_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "object_id,gt_theta_deg,pred_theta_deg,angle_err_deg,flipped,iou,final_loss");
  EXPECT_NE(csv.find("\n2,30,30,"), std::string::npos);
}

TEST(Svg, WellFormed) {
  const std::string s = svg_scatter({{0, 1, 2}, {3, 4, 5}}, "t", "x", "y");
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  const std::string l = svg_line({{0, 1}, {1, 0}}, "loss", "step", "loss");
  EXPECT_NE(l.find("polyline"), std::string::npos);
}

TEST(Files, WriteAndRead) {
  const auto dir = std::filesystem::temp_directory_path() / "h2rbox_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text_file((dir / "a.json").string(), R"({"k": [1, 2]})");
  EXPECT_EQ(read_json_file((dir / "a.json").string()).at("k").size(), 2u);
  EXPECT_THROW(read_json_file((dir / "missing.json").string()), InputError);
  write_text_file((dir / "bad.json").string(), "{");
  EXPECT_THROW(read_json_file((dir / "bad.json").string()), InputError);
  std::filesystem::remove_all(dir.parent_path());
}
