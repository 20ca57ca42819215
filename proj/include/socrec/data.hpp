#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "socrec/matrix.hpp"
#include "socrec/model.hpp"

namespace socrec {

// One exposure event. `click` doubles as the ground-truth label.
struct InteractionRecord {
  std::size_t user = 0;  // index into Dataset::user_ids
  std::size_t item = 0;  // index into Dataset::item_ids
  bool click = false;
  bool like = false;
  bool follow = false;
  std::int64_t timestamp = 0;  // milliseconds, >= 0

  bool label() const noexcept { return click; }
  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

// Interaction log with densely interned user and item ids. Filtered and split
// datasets keep the id tables of their parent so indices stay comparable.
class Dataset {
 public:
  std::vector<InteractionRecord> records;

  std::size_t intern_user(std::string_view id);
  std::size_t intern_item(std::string_view id);
  const std::vector<std::string>& user_ids() const noexcept { return user_ids_; }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  std::size_t user_count() const noexcept { return user_ids_.size(); }
  std::size_t item_count() const noexcept { return item_ids_.size(); }
  // Index of an item id, or npos.
  std::size_t find_item(std::string_view id) const;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  // Same id tables, no records.
  Dataset empty_copy() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, std::size_t> user_index_;
  std::unordered_map<std::string, std::size_t> item_index_;
};

// Record-level equality with ids resolved to strings; id table order and
// unreferenced ids are ignored.
bool same_records(const Dataset& a, const Dataset& b);

inline constexpr std::string_view kInteractionHeader = "user_id,item_id,click,like,follow,timestamp";

// CSV with header `user_id,item_id,click,like,follow,timestamp`; flags are 0/1.
Dataset load_interactions(const std::filesystem::path& path);
Dataset parse_interactions(std::istream& in, const std::string& source = "<stream>");
void save_interactions(const Dataset& ds, const std::filesystem::path& path);
void write_interactions(const Dataset& ds, std::ostream& out);

enum class FilterPolicy { kAnd, kOr };
FilterPolicy parse_filter_policy(std::string_view name);
std::string_view to_string(FilterPolicy p);

// Keeps users with at least one like and (kAnd) / or (kOr) at least one follow.
// Warns on `warn` when nothing survives.
Dataset filter_multilevel(const Dataset& ds, FilterPolicy policy = FilterPolicy::kAnd,
                          std::ostream* warn = nullptr);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Per user, the earliest ceil(ratio * count) records (by timestamp, ties by
// file order) go to train, the rest to test. Relative record order is kept.
TrainTestSplit split_train_test(const Dataset& ds, double ratio = 0.8);

// Histories indexed by user, built from `train` in chronological order.
std::vector<UserHistory> build_histories(const Dataset& train);

struct Example {
  std::size_t user = 0;
  std::size_t item = 0;
  double label = 0.0;
};

std::vector<Example> exposures(const Dataset& ds);

// Item-feature CSV: `item_id,f1,...,fd`.
void save_item_features(const std::vector<std::string>& item_ids, const Matrix& features,
                        const std::filesystem::path& path);
// Features aligned with `ds` item indices. Every dataset item must be present.
Matrix load_item_features(const std::filesystem::path& path, const Dataset& ds);

struct SynthConfig {
  std::size_t users = 500;
  std::size_t items = 2000;
  std::size_t d_latent = 16;
  std::size_t topics = 12;
  double like_rate = 0.35;
  double follow_rate = 0.2;
  std::size_t exposure_per_user = 60;
  double noise_sigma = 0.35;
  std::uint64_t seed = 7;

  void validate() const;
};

// Planted ground truth, kept for oracle checks.
struct SynthTruth {
  std::vector<std::size_t> item_topic;
  std::vector<std::vector<double>> click_mix;   // per user, over topics
  std::vector<std::vector<double>> like_mix;
  std::vector<std::vector<double>> follow_mix;
  std::vector<double> record_logit;             // true click logit per record
};

struct SyntheticData {
  Dataset dataset;
  Matrix item_features;  // aligned with dataset item indices
  SynthTruth truth;
};

SyntheticData gen_synthetic(const SynthConfig& cfg);

}  // namespace socrec
