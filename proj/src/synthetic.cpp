#include <algorithm>
#include <cmath>
#include <random>

#include "socrec/data.hpp"
#include "socrec/errors.hpp"

namespace socrec {

namespace {

// Ground-truth click logit. The follow topic carries the strongest signal,
// like topics less, and the broad click mixture the least.
constexpr double kBias = -1.6;
constexpr double kClickWeight = 0.8;
constexpr double kLikeWeight = 1.2;
constexpr double kFollowWeight = 2.2;
// Exposure topic = kPopularShare * popularity + kInterestShare * like mixture
// + rest * click mixture.
constexpr double kPopularShare = 0.4;
constexpr double kInterestShare = 0.25;

std::size_t draw_from(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    if (x < probs[i]) return i;
    x -= probs[i];
  }
  return probs.size() - 1;
}

std::size_t other_topic(std::size_t k, std::initializer_list<std::size_t> avoid,
                        std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  while (true) {
    const std::size_t t = pick(rng);
    if (std::find(avoid.begin(), avoid.end(), t) == avoid.end()) return t;
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (users < 1 || items < 1 || d_latent < 1 || topics < 1 || exposure_per_user < 1) {
    throw ConfigError("synthetic config: users, items, d_latent, topics and exposure_per_user "
                      "must all be at least 1");
  }
  if (topics < 4) throw ConfigError("synthetic config: need at least 4 topics");
  if (items < topics) throw ConfigError("synthetic config: need at least one item per topic");
  if (!(like_rate >= 0.0 && like_rate <= 1.0) || !(follow_rate >= 0.0 && follow_rate <= 1.0)) {
    throw ConfigError("synthetic config: like_rate and follow_rate must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("synthetic config: noise_sigma must be finite and non-negative");
  }
}

SyntheticData gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t k_topics = cfg.topics;
  const std::size_t d = cfg.d_latent;

  // Unit-norm topic centres.
  Matrix centres(k_topics, d);
  for (std::size_t t = 0; t < k_topics; ++t) {
    double norm = 0.0;
    for (double& x : centres.row(t)) {
      x = normal(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : centres.row(t)) x /= norm;
  }

  // Zipf-like topic popularity drives what gets shown.
  std::vector<double> popularity(k_topics);
  double pop_total = 0.0;
  for (std::size_t t = 0; t < k_topics; ++t) {
    popularity[t] = 1.0 / std::sqrt(static_cast<double>(t + 1));
    pop_total += popularity[t];
  }
  for (double& p : popularity) p /= pop_total;

  SyntheticData out;
  SynthTruth& truth = out.truth;
  truth.item_topic.resize(cfg.items);
  std::vector<std::vector<std::size_t>> items_of(k_topics);
  out.item_features = Matrix(cfg.items, d);
  const double noise_scale = cfg.noise_sigma / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < cfg.items; ++i) {
    // Round-robin guarantees every topic owns items.
    const std::size_t t = i < k_topics ? i : std::uniform_int_distribution<std::size_t>(0, k_topics - 1)(rng);
    truth.item_topic[i] = t;
    items_of[t].push_back(i);
    for (std::size_t j = 0; j < d; ++j) out.item_features(i, j) = centres(t, j) + noise_scale * normal(rng);
  }

  Dataset& ds = out.dataset;
  for (std::size_t i = 0; i < cfg.items; ++i) ds.intern_item("i" + std::to_string(i));

  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t user = ds.intern_user("u" + std::to_string(u));

    std::vector<double> click_mix(k_topics);
    double total = 0.0;
    for (double& x : click_mix) total += (x = gamma(rng));
    for (double& x : click_mix) x /= total;

    // Narrowest: the follow mixture sits mostly on one core topic.
    const std::size_t core = std::uniform_int_distribution<std::size_t>(0, k_topics - 1)(rng);
    const std::size_t follow_side = other_topic(k_topics, {core}, rng);
    const std::size_t like_a = other_topic(k_topics, {core, follow_side}, rng);
    const std::size_t like_b = other_topic(k_topics, {core, follow_side, like_a}, rng);
    std::vector<double> follow_mix(k_topics, 0.0);
    follow_mix[core] = 0.7;
    follow_mix[follow_side] = 0.3;
    std::vector<double> like_mix(k_topics, 0.0);
    like_mix[core] = 0.4;
    like_mix[like_a] = 0.3;
    like_mix[like_b] = 0.3;

    std::vector<double> exposure_mix(k_topics);
    for (std::size_t t = 0; t < k_topics; ++t) {
      exposure_mix[t] = kPopularShare * popularity[t] + kInterestShare * like_mix[t] +
                        (1.0 - kPopularShare - kInterestShare) * click_mix[t];
    }
    const double like_max = *std::max_element(like_mix.begin(), like_mix.end());
    const double follow_max = *std::max_element(follow_mix.begin(), follow_mix.end());

    std::int64_t ts = static_cast<std::int64_t>(unit(rng) * 1e9);
    for (std::size_t e = 0; e < cfg.exposure_per_user; ++e) {
      const std::size_t t = draw_from(exposure_mix, rng);
      const auto& pool = items_of[t];
      const std::size_t item = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      const double logit = kBias +
                           kClickWeight * (static_cast<double>(k_topics) * click_mix[t] - 1.0) +
                           kLikeWeight * like_mix[t] / like_max +
                           kFollowWeight * follow_mix[t] / follow_max;
      InteractionRecord r;
      r.user = user;
      r.item = item;
      r.click = unit(rng) < 1.0 / (1.0 + std::exp(-logit));
      const double like_draw = unit(rng);
      const double follow_draw = unit(rng);
      r.like = like_draw < cfg.like_rate * like_mix[t] / like_max;
      r.follow = follow_draw < cfg.follow_rate * follow_mix[t] / follow_max;
      ts += 1 + static_cast<std::int64_t>(unit(rng) * 600000.0);
      r.timestamp = ts;
      ds.records.push_back(r);
      truth.record_logit.push_back(logit);
    }
    truth.click_mix.push_back(std::move(click_mix));
    truth.like_mix.push_back(std::move(like_mix));
    truth.follow_mix.push_back(std::move(follow_mix));
  }
  return out;
}

}  // namespace socrec
