#include "socrec/attention.hpp"

#include <array>

namespace socrec {

const std::array<std::string, kSocMatrixCount>& soc_matrix_names() {
  static const std::array<std::string, kSocMatrixCount> names = {
      "co_like.w_q",   "co_like.w_k",   "co_like.w_v",   "co_follow.w_q",
      "co_follow.w_k", "co_follow.w_v", "self_like.w_q", "self_like.w_k",
      "self_like.w_v", "self_follow.w_q", "self_follow.w_k", "self_follow.w_v"};
  return names;
}

std::string_view to_string(SocVariant v) {
  switch (v) {
    case SocVariant::kFull:
      return "full";
    case SocVariant::kCoOnly:
      return "co_only";
    case SocVariant::kNone:
      return "none";
  }
  return "?";
}

SocVariant parse_variant(std::string_view name) {
  if (name == "full") return SocVariant::kFull;
  if (name == "co_only") return SocVariant::kCoOnly;
  if (name == "none") return SocVariant::kNone;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, co_only or none)");
}

std::size_t soc_dim(const SocParams& p) {
  const std::size_t d = p.co_like.w_q.rows();
  p.for_each([d](const Matrix& w) {
    if (w.rows() != d || w.cols() != d) {
      throw ShapeError("SocParams: expected " + std::to_string(d) + "x" + std::to_string(d) +
                       " weight, got " + w.shape_string());
    }
  });
  if (d == 0) throw ShapeError("SocParams: d must be at least 1");
  return d;
}

SocParams init_soc_params(std::size_t d, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (2.0 * static_cast<double>(d)));
  std::uniform_real_distribution<double> dist(-limit, limit);
  SocParams p;
  p.for_each([&](Matrix& w) {
    w = Matrix(d, d);
    for (double& x : w.data()) x = dist(rng);
  });
  return p;
}

SocParams constant_soc_params(std::size_t d, double value) {
  SocParams p;
  p.for_each([&](Matrix& w) { w = Matrix(d, d, value); });
  return p;
}

}  // namespace socrec
