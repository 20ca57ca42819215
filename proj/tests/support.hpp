#pragma once

// Helpers shared by the unit tests and the acceptance runner. The oracles
// here work on plain nested vectors and never call library arithmetic, so a
// bug in the library cannot cancel out against the same bug in the check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "socrec/data.hpp"
#include "socrec/matrix.hpp"
#include "socrec/metrics.hpp"
#include "socrec/model.hpp"

namespace socrec::testing {

using Grid = std::vector<std::vector<double>>;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

inline Grid to_grid(const Matrix& m) {
  Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

inline double max_abs_diff(const Grid& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c) worst = std::max(worst, std::abs(a[r][c] - b(r, c)));
  return worst;
}

namespace oracle {

inline Grid matmul(const Grid& a, const Grid& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Grid out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      long double acc = 0.0L;
      for (std::size_t t = 0; t < k; ++t) acc += static_cast<long double>(a[i][t]) * b[t][j];
      out[i][j] = static_cast<double>(acc);
    }
  return out;
}

inline Grid transpose(const Grid& a) {
  if (a.empty()) return {};
  Grid out(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[j][i] = a[i][j];
  return out;
}

inline Grid softmax_rows(Grid a) {
  for (auto& row : a) {
    long double total = 0.0L;
    for (double x : row) total += std::exp(static_cast<long double>(x));
    for (double& x : row) x = static_cast<double>(std::exp(static_cast<long double>(x)) / total);
  }
  return a;
}

inline Grid plus(Grid a, const Grid& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
  return a;
}

// softmax((u wq)(u' wk)^T) (u' wv), written out without library calls.
inline Grid attend(const Grid& u, const Grid& u_other, const Grid& wq, const Grid& wk,
                   const Grid& wv) {
  const Grid q = matmul(u, wq);
  const Grid k = matmul(u_other, wk);
  const Grid v = matmul(u_other, wv);
  return matmul(softmax_rows(matmul(q, transpose(k))), v);
}

inline std::vector<double> mean_rows(const Grid& a) {
  std::vector<double> out(a.empty() ? 0 : a[0].size(), 0.0);
  for (const auto& row : a)
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
  for (double& x : out) x /= static_cast<double>(a.size());
  return out;
}

// Pairwise Mann-Whitney count.
inline double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  double good = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) good += 1.0;
      else if (scores[i] == scores[j]) good += 0.5;
    }
  }
  return good / pairs;
}

inline double naive_bce(double logit, double y) {
  const double p = 1.0 / (1.0 + std::exp(-logit));
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

struct Evaluation {
  double auc = 0.0, precision = 0.0, recall = 0.0, f = 0.0;
};

// Scores every test row with score(), then computes pooled AUC by pair
// counting and macro P/R@k by sorting each user's list by hand.
inline Evaluation evaluate(const ScaaModel& model, const std::vector<UserHistory>& histories,
                           const Dataset& test, std::size_t k) {
  struct Row {
    std::size_t item;
    double p;
    std::uint8_t y;
  };
  std::vector<std::vector<Row>> per_user(test.user_count());
  std::vector<double> all_p;
  std::vector<std::uint8_t> all_y;
  for (const auto& r : test.records) {
    const UserHistory empty;
    const UserHistory& h = r.user < histories.size() ? histories[r.user] : empty;
    const double p = logistic(score(model, h, r.item));
    per_user[r.user].push_back({r.item, p, static_cast<std::uint8_t>(r.click)});
    all_p.push_back(p);
    all_y.push_back(static_cast<std::uint8_t>(r.click));
  }
  Evaluation e;
  e.auc = auc(all_p, all_y);
  double p_sum = 0.0, r_sum = 0.0;
  std::size_t users = 0;
  for (auto& rows : per_user) {
    std::size_t relevant = 0;
    for (const Row& row : rows) relevant += row.y;
    if (relevant == 0) continue;
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.p != b.p ? a.p > b.p : a.item < b.item;
    });
    const std::size_t top = std::min(k, rows.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < top; ++i) hits += rows[i].y;
    p_sum += static_cast<double>(hits) / static_cast<double>(top);
    r_sum += static_cast<double>(hits) / static_cast<double>(relevant);
    ++users;
  }
  e.precision = p_sum / static_cast<double>(users);
  e.recall = r_sum / static_cast<double>(users);
  e.f = e.precision + e.recall == 0.0 ? 0.0 : 2.0 * e.precision * e.recall / (e.precision + e.recall);
  return e;
}

}  // namespace oracle

// Random model with liked/followed/clicked histories over `items` items.
struct RandomUser {
  UserHistory history;
  std::vector<std::size_t> candidates;
};

inline RandomUser random_user(std::size_t items, std::size_t m, std::size_t n, std::size_t c,
                              std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, items - 1);
  RandomUser u;
  for (std::size_t i = 0; i < m; ++i) u.history.liked.push_back(pick(rng));
  for (std::size_t i = 0; i < n; ++i) u.history.followed.push_back(pick(rng));
  for (std::size_t i = 0; i < m + n + 2; ++i) u.history.clicked.push_back(pick(rng));
  for (std::size_t i = 0; i < c; ++i) u.candidates.push_back(pick(rng));
  return u;
}

}  // namespace socrec::testing
