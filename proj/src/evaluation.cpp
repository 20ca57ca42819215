#include "socrec/evaluation.hpp"

#include <cstdio>
#include <exception>
#include <map>
#include <sstream>

#include <json.hpp>

#include "socrec/batch.hpp"
#include "socrec/errors.hpp"

namespace socrec {

namespace {

std::vector<UserGroup> test_groups(const Dataset& test) {
  std::map<std::size_t, UserGroup> by_user;
  for (const auto& r : test.records) {
    UserGroup& g = by_user[r.user];
    g.user = r.user;
    g.items.push_back(r.item);
    g.labels.push_back(r.click ? 1.0 : 0.0);
  }
  std::vector<UserGroup> out;
  out.reserve(by_user.size());
  for (auto& [user, g] : by_user) out.push_back(std::move(g));
  return out;
}

UserScores score_group(const ScaaModel& model, std::span<const UserHistory> histories,
                       const UserGroup& g) {
  if (g.user >= histories.size()) throw IndexError("evaluate: test user has no history slot");
  UserScores s;
  s.user = g.user;
  s.items = g.items;
  s.probabilities = score_candidates(model, histories[g.user], g.items);
  for (double& z : s.probabilities) z = logistic(z);
  s.labels.assign(g.labels.begin(), g.labels.end());
  return s;
}

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

}  // namespace

std::vector<UserScores> score_test_users_serial(const ScaaModel& model,
                                                std::span<const UserHistory> histories,
                                                const Dataset& test) {
  std::vector<UserScores> out;
  for (const UserGroup& g : test_groups(test)) out.push_back(score_group(model, histories, g));
  return out;
}

std::vector<UserScores> score_test_users(const ScaaModel& model,
                                         std::span<const UserHistory> histories,
                                         const Dataset& test) {
  const auto groups = test_groups(test);
  std::vector<UserScores> out(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(effective_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = score_group(model, histories, groups[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

EvalMetrics evaluate_all(const ScaaModel& model, std::span<const UserHistory> histories,
                         const Dataset& test, const EvalOptions& opts) {
  if (test.empty()) throw UndefinedMetricError("evaluate: empty test split");
  const auto scores = score_test_users(model, histories, test);
  return evaluate_scores(scores, opts);
}

const std::array<AblationArm, 4>& ablation_arms() {
  static const std::array<AblationArm, 4> arms = {{
      {"ALPINE-surrogate", "base", false, SocVariant::kFull},
      {"SCAA_cs", "scaa_cs", true, SocVariant::kNone},
      {"SCAA_s", "scaa_s", true, SocVariant::kCoOnly},
      {"SCAA", "scaa", true, SocVariant::kFull},
  }};
  return arms;
}

AblationResult run_ablation(const Dataset& filtered, const std::optional<Matrix>& features,
                            const AblationConfig& cfg) {
  if (filtered.empty()) throw UndefinedMetricError("ablation: dataset has no qualifying users");
  const TrainTestSplit split = split_train_test(filtered, cfg.split_ratio);
  const auto histories = build_histories(split.train);
  const auto train_examples = exposures(split.train);

  AblationResult result;
  result.seed = cfg.train.seed;
  for (std::size_t a = 0; a < 4; ++a) {
    const AblationArm& arm = ablation_arms()[a];
    try {
      ModelShape shape = cfg.shape;
      shape.item_count = filtered.item_count();
      shape.use_soc = arm.use_soc;
      shape.variant = arm.variant;
      ScaaModel model = init_model(shape, cfg.train.seed);
      if (features) use_external_features(model, *features);
      result.arms[a].loss_curve = train(model, histories, train_examples, cfg.train).loss_curve;
      result.arms[a].metrics = evaluate_all(model, histories, split.test, cfg.eval);
    } catch (const NumericError& e) {
      throw NumericError(arm.label + ": " + e.what());
    } catch (const UndefinedMetricError& e) {
      throw UndefinedMetricError(arm.label + ": " + e.what());
    }
  }
  return result;
}

EvalReport make_ablation_report(std::span<const AblationResult> runs, std::size_t k) {
  EvalReport report;
  report.k = k;
  for (const AblationResult& run : runs) {
    const std::string block = "seed " + std::to_string(run.seed);
    for (std::size_t a = 0; a < 4; ++a) {
      report.rows.push_back({ablation_arms()[a].label, ablation_arms()[a].key, block,
                             run.arms[a].metrics});
    }
    report.improvements.emplace_back(block, run.relative_auc_gain());
  }
  if (runs.size() > 1) {
    std::array<EvalMetrics, 4> mean{};
    const double n = static_cast<double>(runs.size());
    for (const AblationResult& run : runs) {
      for (std::size_t a = 0; a < 4; ++a) {
        const EvalMetrics& m = run.arms[a].metrics;
        mean[a].auc += m.auc / n;
        mean[a].recall += m.recall / n;
        mean[a].precision += m.precision / n;
        mean[a].f += m.f / n;
        mean[a].precision_fixed += m.precision_fixed / n;
        mean[a].f_fixed += m.f_fixed / n;
        mean[a].users = m.users;
        mean[a].pairs = m.pairs;
      }
    }
    for (std::size_t a = 0; a < 4; ++a) {
      report.rows.push_back({ablation_arms()[a].label, ablation_arms()[a].key, "mean", mean[a]});
    }
    report.improvements.emplace_back("mean", mean[3].auc / mean[0].auc - 1.0);
  }
  return report;
}

EvalReport make_single_report(const std::string& label, const std::string& key,
                              const EvalMetrics& m, std::size_t k) {
  EvalReport report;
  report.k = k;
  report.rows.push_back({label, key, label, m});
  return report;
}

std::string format_table(const EvalReport& report) {
  bool show_fixed = false;
  for (const auto& r : report.rows) {
    show_fixed = show_fixed || fixed3(r.metrics.precision) != fixed3(r.metrics.precision_fixed);
  }
  const std::string k = std::to_string(report.k);
  char line[256];
  std::ostringstream os;
  std::string current_block;
  for (const auto& r : report.rows) {
    if (r.block != current_block) {
      if (!current_block.empty()) os << '\n';
      current_block = r.block;
      os << "[" << r.block << "]\n";
      std::snprintf(line, sizeof line, "%-18s %7s %7s %7s %7s", "Methods", "AUC",
                    ("R@" + k).c_str(), ("P@" + k).c_str(), ("F@" + k).c_str());
      os << line;
      if (show_fixed) {
        std::snprintf(line, sizeof line, " %8s %8s", ("P@" + k + "*").c_str(),
                      ("F@" + k + "*").c_str());
        os << line;
      }
      os << '\n';
    }
    std::snprintf(line, sizeof line, "%-18s %7s %7s %7s %7s", r.label.c_str(),
                  fixed3(r.metrics.auc).c_str(), fixed3(r.metrics.recall).c_str(),
                  fixed3(r.metrics.precision).c_str(), fixed3(r.metrics.f).c_str());
    os << line;
    if (show_fixed) {
      std::snprintf(line, sizeof line, " %8s %8s", fixed3(r.metrics.precision_fixed).c_str(),
                    fixed3(r.metrics.f_fixed).c_str());
      os << line;
    }
    os << '\n';
  }
  if (show_fixed) {
    os << "\n* precision denominator fixed at k even when a user has fewer candidates\n";
  }
  if (!report.improvements.empty()) {
    os << '\n';
    for (const auto& [block, gain] : report.improvements) {
      std::snprintf(line, sizeof line, "relative AUC gain of SCAA over base [%s]: %+.1f%%\n",
                    block.c_str(), 100.0 * gain);
      os << line;
    }
  }
  return os.str();
}

std::string format_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["k"] = report.k;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["block"] = r.block;
    row["model"] = r.key;
    row["label"] = r.label;
    row["auc"] = r.metrics.auc;
    row["recall"] = r.metrics.recall;
    row["precision"] = r.metrics.precision;
    row["f"] = r.metrics.f;
    row["precision_fixed_k"] = r.metrics.precision_fixed;
    row["f_fixed_k"] = r.metrics.f_fixed;
    row["users"] = r.metrics.users;
    row["pairs"] = r.metrics.pairs;
    doc["rows"].push_back(std::move(row));
  }
  doc["relative_auc_gain"] = nlohmann::ordered_json::object();
  for (const auto& [block, gain] : report.improvements) doc["relative_auc_gain"][block] = gain;
  return doc.dump(2) + "\n";
}

}  // namespace socrec
