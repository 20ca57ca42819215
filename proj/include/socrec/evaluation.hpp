#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socrec/data.hpp"
#include "socrec/metrics.hpp"
#include "socrec/model.hpp"
#include "socrec/training.hpp"

namespace socrec {

// Candidate lists are each user's test exposures; labels are their clicks.
// The *_serial variant is the reference for the OpenMP version.
std::vector<UserScores> score_test_users(const ScaaModel& model,
                                         std::span<const UserHistory> histories,
                                         const Dataset& test);
std::vector<UserScores> score_test_users_serial(const ScaaModel& model,
                                                std::span<const UserHistory> histories,
                                                const Dataset& test);

EvalMetrics evaluate_all(const ScaaModel& model, std::span<const UserHistory> histories,
                         const Dataset& test, const EvalOptions& opts = {});

struct AblationArm {
  std::string label;
  std::string key;
  bool use_soc = true;
  SocVariant variant = SocVariant::kFull;
};

// Fixed order: base (SoC path removed), SCAA_cs, SCAA_s, SCAA.
const std::array<AblationArm, 4>& ablation_arms();

struct AblationConfig {
  ModelShape shape;  // item_count, variant and use_soc are set per arm
  TrainConfig train;
  EvalOptions eval;
  double split_ratio = 0.8;
};

struct ArmResult {
  EvalMetrics metrics;
  std::vector<double> loss_curve;
};

struct AblationResult {
  std::uint64_t seed = 0;
  std::array<ArmResult, 4> arms;

  // AUC(SCAA) / AUC(base) - 1.
  double relative_auc_gain() const { return arms[3].metrics.auc / arms[0].metrics.auc - 1.0; }
};

// Trains the four arms from identical seeds on one shared split of `filtered`
// and evaluates each on the same test set. `features`, when given, replaces
// and freezes the item table.
AblationResult run_ablation(const Dataset& filtered, const std::optional<Matrix>& features,
                            const AblationConfig& cfg);

struct ReportRow {
  std::string label;
  std::string key;
  std::string block;  // "seed <s>", "mean", or a single-model label
  EvalMetrics metrics;
};

struct EvalReport {
  std::size_t k = 50;
  std::vector<ReportRow> rows;
  // Relative AUC gain of the full model over the base model per block.
  std::vector<std::pair<std::string, double>> improvements;
};

EvalReport make_ablation_report(std::span<const AblationResult> runs, std::size_t k);
EvalReport make_single_report(const std::string& label, const std::string& key,
                              const EvalMetrics& m, std::size_t k);

// Fixed-width table with columns AUC, R@k, P@k, F@k. Adds the fixed-denominator
// P@k / F@k columns when they differ from the truncated ones.
std::string format_table(const EvalReport& report);
// Machine-readable key/value document (JSON).
std::string format_json(const EvalReport& report);

}  // namespace socrec
