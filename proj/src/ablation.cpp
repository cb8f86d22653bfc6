#include "h2rbox/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "h2rbox/io.hpp"

namespace h2rbox {

std::string AblationRow::label() const {
  std::string out = ss_enabled ? "ws+ss" : "ws";
  out += "/";
  out += to_string(assigner);
  out += "/";
  out += to_string(border);
  if (s1) out += "/s1";
  if (s2) out += "/s2";
  return out;
}

std::vector<AblationRow> ablate(const SceneSpec& scene, const RecoveryConfig& base,
                                const AblationOptions& opts) {
  const bool has_circular = std::any_of(scene.objects.begin(), scene.objects.end(),
                                        [](const SceneObject& o) { return o.circular; });
  const bool vary_circular = opts.circular_strategies_auto && has_circular;
  const std::vector<bool> flags = vary_circular ? std::vector<bool>{false, true}
                                                : std::vector<bool>{false};

  // Runs that cannot differ share one report: without SS neither the assigner
  // nor S1 has any effect.
  std::map<std::tuple<bool, int, int, bool>, RecoveryReport> cache;
  std::vector<AblationRow> rows;
  for (bool ss : opts.ss) {
    for (Assigner assigner : opts.assigners) {
      for (BorderMode border : opts.borders) {
        for (bool s1 : flags) {
          RecoveryConfig cfg = base;
          cfg.ss_enabled = ss;
          cfg.assigner = assigner;
          cfg.border_mode = border;
          cfg.s1_mask_circular = s1;
          cfg.s2_output_hbox_circular = false;
          const auto key = std::make_tuple(ss, ss ? static_cast<int>(assigner) : 0,
                                           static_cast<int>(border), ss && s1);
          auto it = cache.find(key);
          if (it == cache.end()) it = cache.emplace(key, run_recovery(scene, cfg)).first;
          for (bool s2 : flags) {
            RecoveryReport report = it->second;
            apply_output_strategy(report, s2, cfg.flip_tau);
            EvalConfig ecfg = opts.eval;
            ecfg.s2_output_hbox_circular = s2;
            AblationRow row;
            row.ss_enabled = ss;
            row.assigner = assigner;
            row.border = border;
            row.s1 = s1;
            row.s2 = s2;
            row.diverged = report.diverged;
            row.summary = report.summary;
            row.eval = evaluate(report, scene.objects, ecfg);
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

namespace {

std::string fixed(double v, int precision) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

std::string format_ablation_table(const std::vector<AblationRow>& rows,
                                  const std::vector<int>& class_columns) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-3s %-3s %-4s %-2s %-2s %8s %8s %7s %7s %7s %7s",
                "SS", "RA", "BD", "S1", "S2", "med_err", "p95_err", "flip", "AP", "AP50",
                "AP75");
  out << line;
  for (int c : class_columns) {
    std::snprintf(line, sizeof line, " %7s", ("AP_c" + std::to_string(c)).c_str());
    out << line;
  }
  out << '\n';
  for (const AblationRow& r : rows) {
    std::snprintf(line, sizeof line, "%-3s %-3s %-4s %-2s %-2s %8s %8s %7s %7s %7s %7s",
                  r.ss_enabled ? "on" : "off", std::string(to_string(r.assigner)).c_str(),
                  std::string(to_string(r.border)).c_str(), r.s1 ? "y" : "n",
                  r.s2 ? "y" : "n", fixed(r.summary.median_angle_error_deg, 3).c_str(),
                  fixed(r.summary.p95_angle_error_deg, 3).c_str(),
                  fixed(r.summary.flip_fraction, 3).c_str(), fixed(100 * r.eval.ap, 2).c_str(),
                  fixed(100 * r.eval.ap50, 2).c_str(), fixed(100 * r.eval.ap75, 2).c_str());
    out << line;
    for (int c : class_columns) {
      const auto it = r.eval.per_class.find(c);
      const double ap = it == r.eval.per_class.end() ? 0.0 : it->second.ap.ap;
      std::snprintf(line, sizeof line, " %7s", fixed(100 * ap, 2).c_str());
      out << line;
    }
    out << '\n';
  }
  return out.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "ss,assigner,border,s1,s2,diverged,objects,filtered,median_angle_err_deg,"
         "p95_angle_err_deg,fraction_below_3deg,flip_fraction,mean_iou,ap,ap50,ap75\n";
  for (const AblationRow& r : rows) {
    out << (r.ss_enabled ? 1 : 0) << ',' << to_string(r.assigner) << ',' << to_string(r.border)
        << ',' << (r.s1 ? 1 : 0) << ',' << (r.s2 ? 1 : 0) << ',' << (r.diverged ? 1 : 0) << ','
        << r.summary.objects << ',' << r.summary.filtered << ','
        << format_number(r.summary.median_angle_error_deg) << ','
        << format_number(r.summary.p95_angle_error_deg) << ','
        << format_number(r.summary.fraction_below_3deg) << ','
        << format_number(r.summary.flip_fraction) << ',' << format_number(r.summary.mean_iou)
        << ',' << format_number(r.eval.ap) << ',' << format_number(r.eval.ap50) << ','
        << format_number(r.eval.ap75) << '\n';
  }
  return out.str();
}

}  // namespace h2rbox
