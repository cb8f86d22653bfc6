#pragma once

#include <string>
#include <vector>

#include "h2rbox/eval_metrics.hpp"
#include "h2rbox/recovery.hpp"

namespace h2rbox {

struct AblationOptions {
  std::vector<bool> ss{true, false};
  std::vector<Assigner> assigners{Assigner::kO2O, Assigner::kO2M};
  std::vector<BorderMode> borders{BorderMode::kCrop, BorderMode::kPad};
  /// Vary S1 and S2 only when the scene holds circular objects.
  bool circular_strategies_auto = true;
  EvalConfig eval;
};

struct AblationRow {
  bool ss_enabled = true;
  Assigner assigner = Assigner::kO2O;
  BorderMode border = BorderMode::kPad;
  bool s1 = false;
  bool s2 = false;
  bool diverged = false;
  RecoverySummary summary;
  EvalResult eval;

  std::string label() const;
};

/// Cross product of the configured switches on one scene with shared seeds.
/// S2 only changes evaluation, so each training run serves both S2 rows.
std::vector<AblationRow> ablate(const SceneSpec& scene, const RecoveryConfig& base,
                                const AblationOptions& opts = {});

/// Fixed-width table, one row per configuration.
std::string format_ablation_table(const std::vector<AblationRow>& rows,
                                  const std::vector<int>& class_columns = {});
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace h2rbox
