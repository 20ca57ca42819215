#include "socrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "socrec/errors.hpp"

namespace socrec {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

bool parse_flag(std::string_view s, bool& out) {
  if (s == "0") {
    out = false;
    return true;
  }
  if (s == "1") {
    out = true;
    return true;
  }
  return false;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::size_t Dataset::intern_user(std::string_view id) {
  auto [it, inserted] = user_index_.try_emplace(std::string(id), user_ids_.size());
  if (inserted) user_ids_.emplace_back(id);
  return it->second;
}

std::size_t Dataset::intern_item(std::string_view id) {
  auto [it, inserted] = item_index_.try_emplace(std::string(id), item_ids_.size());
  if (inserted) item_ids_.emplace_back(id);
  return it->second;
}

std::size_t Dataset::find_item(std::string_view id) const {
  auto it = item_index_.find(std::string(id));
  return it == item_index_.end() ? npos : it->second;
}

Dataset Dataset::empty_copy() const {
  Dataset out = *this;
  out.records.clear();
  return out;
}

bool same_records(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ra = a.records[i];
    const auto& rb = b.records[i];
    if (a.user_ids()[ra.user] != b.user_ids()[rb.user] ||
        a.item_ids()[ra.item] != b.item_ids()[rb.item] || ra.click != rb.click ||
        ra.like != rb.like || ra.follow != rb.follow || ra.timestamp != rb.timestamp) {
      return false;
    }
  }
  return true;
}

Dataset parse_interactions(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  const auto header = split_commas(strip_cr(line));
  constexpr std::string_view kColumns[] = {"user_id", "item_id", "click",
                                           "like",    "follow",  "timestamp"};
  std::size_t index[6];
  for (std::size_t c = 0; c < 6; ++c) {
    auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) {
      throw ParseError(source, 1, "missing column '" + std::string(kColumns[c]) + "'");
    }
    index[c] = static_cast<std::size_t>(it - header.begin());
  }

  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = strip_cr(line);
    if (row.empty()) continue;
    const auto fields = split_commas(row);
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    InteractionRecord r;
    const std::string_view user = fields[index[0]];
    const std::string_view item = fields[index[1]];
    if (user.empty() || item.empty()) throw ParseError(source, line_no, "empty id");
    bool* flags[] = {&r.click, &r.like, &r.follow};
    for (std::size_t f = 0; f < 3; ++f) {
      if (!parse_flag(fields[index[2 + f]], *flags[f])) {
        throw ParseError(source, line_no,
                         "column '" + std::string(kColumns[2 + f]) + "' must be 0 or 1, got '" +
                             std::string(fields[index[2 + f]]) + "'");
      }
    }
    const std::string_view ts = fields[index[5]];
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), r.timestamp);
    if (ec != std::errc() || ptr != ts.data() + ts.size() || r.timestamp < 0) {
      throw ParseError(source, line_no, "bad timestamp '" + std::string(ts) + "'");
    }
    r.user = ds.intern_user(user);
    r.item = ds.intern_item(item);
    ds.records.push_back(r);
  }
  return ds;
}

Dataset load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_interactions(in, path.string());
}

void write_interactions(const Dataset& ds, std::ostream& out) {
  out << kInteractionHeader << '\n';
  for (const auto& r : ds.records) {
    out << ds.user_ids()[r.user] << ',' << ds.item_ids()[r.item] << ',' << int(r.click) << ','
        << int(r.like) << ',' << int(r.follow) << ',' << r.timestamp << '\n';
  }
}

void save_interactions(const Dataset& ds, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_interactions(ds, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FilterPolicy parse_filter_policy(std::string_view name) {
  if (name == "and") return FilterPolicy::kAnd;
  if (name == "or") return FilterPolicy::kOr;
  throw ConfigError("unknown filter policy '" + std::string(name) + "' (expected and, or)");
}

std::string_view to_string(FilterPolicy p) { return p == FilterPolicy::kAnd ? "and" : "or"; }

Dataset filter_multilevel(const Dataset& ds, FilterPolicy policy, std::ostream* warn) {
  std::vector<char> has_like(ds.user_count(), 0);
  std::vector<char> has_follow(ds.user_count(), 0);
  for (const auto& r : ds.records) {
    has_like[r.user] |= r.like;
    has_follow[r.user] |= r.follow;
  }
  Dataset out = ds.empty_copy();
  for (const auto& r : ds.records) {
    const bool keep = policy == FilterPolicy::kAnd ? (has_like[r.user] && has_follow[r.user])
                                                   : (has_like[r.user] || has_follow[r.user]);
    if (keep) out.records.push_back(r);
  }
  if (out.empty() && warn != nullptr) {
    *warn << "warning: filter_multilevel (" << to_string(policy)
          << ") left no users; dataset is empty\n";
  }
  return out;
}

TrainTestSplit split_train_test(const Dataset& ds, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> per_user(ds.user_count());
  for (std::size_t i = 0; i < ds.size(); ++i) per_user[ds.records[i].user].push_back(i);

  std::vector<char> to_train(ds.size(), 0);
  for (auto& idx : per_user) {
    if (idx.empty()) continue;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return ds.records[a].timestamp < ds.records[b].timestamp;
    });
    // The small slack keeps products like 0.7 * 10 from rounding up past 7.
    const auto cut = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(idx.size()) - 1e-9));
    const std::size_t n_train = std::clamp<std::size_t>(cut, 1, idx.size());
    for (std::size_t k = 0; k < n_train; ++k) to_train[idx[k]] = 1;
  }

  TrainTestSplit split{ds.empty_copy(), ds.empty_copy()};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (to_train[i] ? split.train : split.test).records.push_back(ds.records[i]);
  }
  return split;
}

std::vector<UserHistory> build_histories(const Dataset& train) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return train.records[a].timestamp < train.records[b].timestamp;
  });
  std::vector<UserHistory> out(train.user_count());
  for (std::size_t i : order) {
    const auto& r = train.records[i];
    if (r.click) out[r.user].clicked.push_back(r.item);
    if (r.like) out[r.user].liked.push_back(r.item);
    if (r.follow) out[r.user].followed.push_back(r.item);
  }
  for (auto& h : out) {
    h.clicked = dedup_ids(h.clicked);
    h.liked = dedup_ids(h.liked);
    h.followed = dedup_ids(h.followed);
  }
  return out;
}

std::vector<Example> exposures(const Dataset& ds) {
  std::vector<Example> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records) out.push_back({r.user, r.item, r.click ? 1.0 : 0.0});
  return out;
}

void save_item_features(const std::vector<std::string>& item_ids, const Matrix& features,
                        const std::filesystem::path& path) {
  if (item_ids.size() != features.rows()) {
    throw ShapeError("save_item_features: " + std::to_string(item_ids.size()) + " ids vs " +
                     features.shape_string() + " features");
  }
  auto out = open_for_write(path);
  out << "item_id";
  for (std::size_t j = 0; j < features.cols(); ++j) out << ",f" << (j + 1);
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out << item_ids[i];
    for (std::size_t j = 0; j < features.cols(); ++j) out << ',' << features(i, j);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Matrix load_item_features(const std::filesystem::path& path, const Dataset& ds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const std::string source = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  const auto header = split_commas(strip_cr(line));
  if (header.size() < 2 || header[0] != "item_id") {
    throw ParseError(source, 1, "expected header item_id,f1,...,fd");
  }
  const std::size_t d = header.size() - 1;
  Matrix features(ds.item_count(), d);
  std::vector<char> seen(ds.item_count(), 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = strip_cr(line);
    if (row.empty()) continue;
    const auto fields = split_commas(row);
    if (fields.size() != d + 1) {
      throw ParseError(source, line_no, "expected " + std::to_string(d + 1) + " fields");
    }
    const std::size_t item = ds.find_item(fields[0]);
    if (item == Dataset::npos) continue;
    for (std::size_t j = 0; j < d; ++j) {
      const std::string_view f = fields[j + 1];
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(value)) {
        throw ParseError(source, line_no, "bad feature value '" + std::string(f) + "'");
      }
      features(item, j) = value;
    }
    seen[item] = 1;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ParseError(source + ": no features for item '" + ds.item_ids()[i] + "'");
  }
  return features;
}

}  // namespace socrec
