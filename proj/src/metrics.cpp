#include "socrec/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "socrec/errors.hpp"

namespace socrec {

RankedList::RankedList(std::vector<RankedEntry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.item < b.item;
  });
  relevant_ = static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const RankedEntry& e) { return e.relevant; }));
}

std::size_t RankedList::relevant_in_top(std::size_t k) const {
  const std::size_t top = std::min(k, entries_.size());
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(top),
      [](const RankedEntry& e) { return e.relevant; }));
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Walk groups of tied scores in ascending order; each positive beats every
  // negative seen in earlier groups and ties with the negatives in its own group.
  double correct = 0.0;
  double negatives_below = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double pos = 0.0;
    double neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1.0;
      ++j;
    }
    correct += pos * negatives_below + 0.5 * pos * neg;
    negatives_below += neg;
    positives += pos;
    i = j;
  }
  if (positives == 0.0 || negatives_below == 0.0) {
    throw UndefinedMetricError("auc: needs at least one positive and one negative label");
  }
  return correct / (positives * negatives_below);
}

double precision_at_k(const RankedList& rl, std::size_t k) {
  if (k == 0) throw ConfigError("precision_at_k: k must be at least 1");
  const std::size_t top = std::min(k, rl.size());
  if (top == 0) throw UndefinedMetricError("precision_at_k: empty list");
  return static_cast<double>(rl.relevant_in_top(k)) / static_cast<double>(top);
}

double precision_at_k_fixed(const RankedList& rl, std::size_t k) {
  if (k == 0) throw ConfigError("precision_at_k: k must be at least 1");
  return static_cast<double>(rl.relevant_in_top(k)) / static_cast<double>(k);
}

double recall_at_k(const RankedList& rl, std::size_t k) {
  if (k == 0) throw ConfigError("recall_at_k: k must be at least 1");
  if (rl.relevant_count() == 0) throw UndefinedMetricError("recall_at_k: no relevant items");
  return static_cast<double>(rl.relevant_in_top(k)) / static_cast<double>(rl.relevant_count());
}

double f_at_k(double p, double r) {
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

EvalMetrics evaluate_scores(std::span<const UserScores> users, const EvalOptions& opts) {
  EvalMetrics m;
  std::vector<double> pooled_scores;
  std::vector<std::uint8_t> pooled_labels;
  double auc_sum = 0.0;
  std::size_t auc_users = 0;
  double p_sum = 0.0, r_sum = 0.0, pf_sum = 0.0;

  for (const UserScores& u : users) {
    if (u.items.size() != u.probabilities.size() || u.items.size() != u.labels.size()) {
      throw ShapeError("evaluate_scores: ragged user scores");
    }
    if (u.items.empty()) continue;
    m.pairs += u.items.size();
    pooled_scores.insert(pooled_scores.end(), u.probabilities.begin(), u.probabilities.end());
    pooled_labels.insert(pooled_labels.end(), u.labels.begin(), u.labels.end());

    const auto positives = static_cast<std::size_t>(
        std::count_if(u.labels.begin(), u.labels.end(), [](std::uint8_t l) { return l != 0; }));
    if (opts.per_user_auc && positives > 0 && positives < u.labels.size()) {
      auc_sum += auc(u.probabilities, u.labels);
      ++auc_users;
    }
    if (positives == 0) continue;

    std::vector<RankedEntry> entries(u.items.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      entries[i] = {u.items[i], u.probabilities[i], u.labels[i] != 0};
    }
    const RankedList rl(std::move(entries));
    p_sum += precision_at_k(rl, opts.k);
    pf_sum += precision_at_k_fixed(rl, opts.k);
    r_sum += recall_at_k(rl, opts.k);
    ++m.users;
  }

  if (m.users == 0) throw UndefinedMetricError("evaluate: no user has a relevant test item");
  if (opts.per_user_auc) {
    if (auc_users == 0) throw UndefinedMetricError("evaluate: no user has both label classes");
    m.auc = auc_sum / static_cast<double>(auc_users);
  } else {
    m.auc = auc(pooled_scores, pooled_labels);
  }
  const double n = static_cast<double>(m.users);
  m.precision = p_sum / n;
  m.recall = r_sum / n;
  m.precision_fixed = pf_sum / n;
  m.f = f_at_k(m.precision, m.recall);
  m.f_fixed = f_at_k(m.precision_fixed, m.recall);
  return m;
}

}  // namespace socrec
