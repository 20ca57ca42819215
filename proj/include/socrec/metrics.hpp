#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace socrec {

struct RankedEntry {
  std::size_t item = 0;
  double probability = 0.0;
  bool relevant = false;
};

// Candidates sorted by probability descending, ties by item id ascending.
class RankedList {
 public:
  explicit RankedList(std::vector<RankedEntry> entries);

  std::span<const RankedEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t relevant_count() const noexcept { return relevant_; }
  std::size_t relevant_in_top(std::size_t k) const;

 private:
  std::vector<RankedEntry> entries_;
  std::size_t relevant_ = 0;
};

// Mann-Whitney AUC: (correctly ordered pairs + 0.5 ties) / (#pos * #neg).
// Throws UndefinedMetricError without both classes.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// relevant-in-top-k' / k' with k' = min(k, |list|).
double precision_at_k(const RankedList& rl, std::size_t k);
// relevant-in-top-k / k, the fixed-denominator convention.
double precision_at_k_fixed(const RankedList& rl, std::size_t k);
// relevant-in-top-k' / total relevant. Throws UndefinedMetricError if none relevant.
double recall_at_k(const RankedList& rl, std::size_t k);
// Harmonic mean; 0 when p + r = 0.
double f_at_k(double p, double r);

struct UserScores {
  std::size_t user = 0;
  std::vector<std::size_t> items;
  std::vector<double> probabilities;
  std::vector<std::uint8_t> labels;  // 1 = clicked
};

struct EvalOptions {
  std::size_t k = 50;
  bool per_user_auc = false;  // average per-user AUC instead of pooled
};

struct EvalMetrics {
  double auc = 0.0;
  double recall = 0.0;
  double precision = 0.0;        // truncated denominator min(k, candidates)
  double f = 0.0;
  double precision_fixed = 0.0;  // denominator always k
  double f_fixed = 0.0;
  std::size_t users = 0;         // users contributing to P/R/F
  std::size_t pairs = 0;         // scored (user, item) pairs
};

// AUC over the pooled (score, label) pairs of all users (or per-user mean when
// opts.per_user_auc). P@k and R@k are macro-averaged over users with a
// relevant item; F@k is the harmonic mean of those two averages.
EvalMetrics evaluate_scores(std::span<const UserScores> users, const EvalOptions& opts = {});

}  // namespace socrec
