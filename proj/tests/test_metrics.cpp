#include <doctest.h>

#include <cmath>
#include <random>

#include "socrec/errors.hpp"
#include "socrec/metrics.hpp"
#include "support.hpp"

using namespace socrec;

namespace {

RankedList list_of(std::vector<double> probs, std::vector<bool> relevant) {
  std::vector<RankedEntry> entries;
  for (std::size_t i = 0; i < probs.size(); ++i) entries.push_back({i, probs[i], relevant[i]});
  return RankedList(std::move(entries));
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("auc examples") {
  const std::vector<double> s{0.9, 0.3, 0.6};
  const std::vector<std::uint8_t> y{1, 0, 1};
  CHECK(auc(s, y) == 1.0);
  const std::vector<double> flat{0.4, 0.4, 0.4, 0.4};
  const std::vector<std::uint8_t> mixed{1, 0, 0, 1};
  CHECK(auc(flat, mixed) == 0.5);
  const std::vector<std::uint8_t> all_pos{1, 1, 1};
  CHECK_THROWS_AS((void)auc(s, all_pos), UndefinedMetricError);
  const std::vector<std::uint8_t> short_labels{1};
  CHECK_THROWS_AS((void)auc(s, short_labels), ShapeError);
}

TEST_CASE("auc matches pairwise counting and ignores monotone transforms") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(2, 12), coarse(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = coarse(rng) * 0.25;
      y[i] = static_cast<std::uint8_t>(rng() & 1);
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    CHECK(std::abs(a - testing::oracle::auc(s, y)) <= 1e-12);
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(std::abs(auc(t, y) - a) <= 1e-12);
  }
}

TEST_CASE("ranked list ordering breaks ties by item id") {
  const RankedList rl({{5, 0.5, false}, {2, 0.5, true}, {9, 0.7, false}});
  CHECK(rl.entries()[0].item == 9);
  CHECK(rl.entries()[1].item == 2);
  CHECK(rl.entries()[2].item == 5);
}

TEST_CASE("precision and recall examples") {
  // Top 2 holds one of the three relevant items.
  const RankedList rl = list_of({0.9, 0.8, 0.7, 0.6, 0.5}, {true, false, true, false, true});
  CHECK(precision_at_k(rl, 2) == 0.5);
  CHECK(recall_at_k(rl, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const RankedList front = list_of({0.9, 0.8, 0.1}, {true, true, false});
  CHECK(recall_at_k(front, 2) == 1.0);
  CHECK(recall_at_k(front, 50) == 1.0);

  // k beyond the list length uses the list length as denominator.
  CHECK(precision_at_k(front, 50) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(precision_at_k_fixed(front, 50) == doctest::Approx(2.0 / 50.0).epsilon(1e-15));

  const RankedList none = list_of({0.3}, {false});
  CHECK_THROWS_AS((void)recall_at_k(none, 1), UndefinedMetricError);
}

TEST_CASE("f_at_k reproduces the published table") {
  // The table truncates to three decimals: 0.37655 is printed as 0.376.
  const auto truncated = [](double x) { return std::floor(x * 1000.0) / 1000.0; };
  CHECK(truncated(f_at_k(0.390, 0.364)) == doctest::Approx(0.376));
  CHECK(truncated(f_at_k(0.385, 0.359)) == doctest::Approx(0.371));
  CHECK(truncated(f_at_k(0.355, 0.383)) == doctest::Approx(0.368));
  CHECK(f_at_k(0.390, 0.364) - 0.376 < 0.001);
  CHECK(std::abs(0.712 / 0.696 - 1.0 - 0.023) <= 0.0005);
  CHECK(f_at_k(0.0, 0.0) == 0.0);
  CHECK(f_at_k(0.25, 0.25) == 0.25);
}

TEST_CASE("evaluate_scores examples") {
  UserScores u;
  u.user = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    u.items.push_back(i);
    u.probabilities.push_back(i == 0 ? 0.99 : 0.5 - 0.001 * static_cast<double>(i));
    u.labels.push_back(i == 0 ? 1 : 0);
  }
  const std::vector<UserScores> single{u};
  const EvalMetrics m = evaluate_scores(single);
  CHECK(m.precision == doctest::Approx(1.0 / 50.0).epsilon(1e-15));
  CHECK(m.recall == 1.0);
  CHECK(m.auc == 1.0);

  UserScores twin = u;
  twin.user = 1;
  const std::vector<UserScores> pair{u, twin};
  const EvalMetrics m2 = evaluate_scores(pair);
  CHECK(m2.precision == m.precision);
  CHECK(m2.recall == m.recall);
  CHECK(m2.f == m.f);
  CHECK(m2.users == 2);
  CHECK(m2.pairs == 120);
}

TEST_CASE("macro averages stay within per-user extremes") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<UserScores> users;
    double p_lo = 1.0, p_hi = 0.0;
    for (std::size_t u = 0; u < 4; ++u) {
      UserScores s;
      s.user = u;
      const std::size_t n = 3 + rng() % 8;
      for (std::size_t i = 0; i < n; ++i) {
        s.items.push_back(i);
        s.probabilities.push_back(unit(rng));
        s.labels.push_back(static_cast<std::uint8_t>(unit(rng) < 0.4));
      }
      s.labels[0] = 1;
      std::vector<RankedEntry> e;
      for (std::size_t i = 0; i < n; ++i) e.push_back({i, s.probabilities[i], s.labels[i] != 0});
      const double p = precision_at_k(RankedList(e), 5);
      p_lo = std::min(p_lo, p);
      p_hi = std::max(p_hi, p);
      users.push_back(std::move(s));
    }
    const EvalMetrics m = evaluate_scores(users, {.k = 5});
    CHECK(m.precision >= p_lo - 1e-15);
    CHECK(m.precision <= p_hi + 1e-15);
    for (double x : {m.precision, m.recall, m.f}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    if (m.precision > 0 && m.recall > 0) {
      CHECK(m.f <= std::max(m.precision, m.recall) + 1e-15);
      CHECK(m.f >= std::min(m.precision, m.recall) - 1e-15);
    }
  }
}

TEST_CASE("evaluate_scores needs an eligible user") {
  UserScores u;
  u.items = {1, 2};
  u.probabilities = {0.2, 0.3};
  u.labels = {0, 0};
  const std::vector<UserScores> users{u};
  CHECK_THROWS_AS((void)evaluate_scores(users), UndefinedMetricError);
}

}  // TEST_SUITE
