#pragma once

// Self-over-co attention over the "like" and "follow" interaction levels.
//
// Given a user's liked-item features U_l (m x d) and followed-item features
// U_f (n x d):
//
//   co-attention   U_l^e = g(Q_l K_f) V_f + U_l,   U_f^e = g(Q_f K_l) V_l + U_f
//   self-attention L = g(Q_l^e K_l^e) V_l^e,        F = g(Q_f^e K_f^e) V_f^e
//   pooling        v = m/(m+n) mean(L) + n/(m+n) mean(F)
//
// where g is a row softmax and every projection is applied row-wise,
// Q = U W_q, K = (U W_k)^T, V = U W_v with d x d weights.
//
// Every function is a template over the value type so the same code runs on
// plain matrices (inference) and on tape variables (training).

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>

#include "socrec/errors.hpp"
#include "socrec/matrix.hpp"
#include "socrec/tape.hpp"

namespace socrec {

enum class Level { kLike, kFollow };

struct LevelFeatures {
  Level level = Level::kLike;
  Matrix features;  // count x d, count may be zero

  std::size_t count() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

template <class T>
struct ProjectionTripleT {
  T w_q;
  T w_k;
  T w_v;
};

template <class T>
struct SocParamsT {
  ProjectionTripleT<T> co_like;
  ProjectionTripleT<T> co_follow;
  ProjectionTripleT<T> self_like;
  ProjectionTripleT<T> self_follow;

  template <class Fn>
  void for_each(Fn&& fn) {
    for (auto* t : {&co_like, &co_follow, &self_like, &self_follow}) {
      fn(t->w_q);
      fn(t->w_k);
      fn(t->w_v);
    }
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto* t : {&co_like, &co_follow, &self_like, &self_follow}) {
      fn(t->w_q);
      fn(t->w_k);
      fn(t->w_v);
    }
  }
};

using ProjectionTriple = ProjectionTripleT<Matrix>;
using SocParams = SocParamsT<Matrix>;

inline constexpr std::size_t kSocMatrixCount = 12;

// Stable names used by checkpoints: co_like.w_q, ..., self_follow.w_v.
const std::array<std::string, kSocMatrixCount>& soc_matrix_names();

enum class SocVariant { kFull, kCoOnly, kNone };

std::string_view to_string(SocVariant v);
SocVariant parse_variant(std::string_view name);

struct SocOptions {
  // Divide attention logits by sqrt(d). Off by default.
  bool scale_logits = false;
  // Self-attention reuses the co-attention projections of the raw features,
  // L = g(Q_l K_l) V_l, instead of the enhanced triples.
  bool literal_self = false;
};

struct InterestVector {
  Matrix v;  // 1 x d
};

// Dimension shared by all twelve matrices; throws ShapeError otherwise.
std::size_t soc_dim(const SocParams& p);

// Uniform in [-sqrt(6/(2d)), sqrt(6/(2d))] per matrix, drawn in the order of
// soc_matrix_names().
SocParams init_soc_params(std::size_t d, std::mt19937_64& rng);
SocParams constant_soc_params(std::size_t d, double value);

namespace detail {

inline Matrix constant_like(const Matrix&, Matrix m) { return m; }
inline Var constant_like(const Var& anchor, Matrix m) { return anchor.tape().constant(std::move(m)); }

inline const Matrix& value_of(const Matrix& m) { return m; }
inline const Matrix& value_of(const Var& v) { return v.value(); }

}  // namespace detail

template <class T>
struct Projected {
  T q;  // c x d
  T k;  // d x c
  T v;  // c x d
};

template <class T>
Projected<T> project(const T& u, const ProjectionTripleT<T>& t) {
  const Matrix& uv = detail::value_of(u);
  if (uv.rows() == 0) throw EmptyLevelError("project: level has no rows");
  const std::size_t d = detail::value_of(t.w_q).rows();
  if (uv.cols() != d) {
    throw ShapeError("project: features " + uv.shape_string() + " vs weights " +
                     detail::value_of(t.w_q).shape_string());
  }
  return {matmul(u, t.w_q), transpose(matmul(u, t.w_k)), matmul(u, t.w_v)};
}

// g(q k), optionally scaled by 1/sqrt(d). Rows sum to one.
template <class T>
T attention_weights(const T& q, const T& k, const SocOptions& opts = {}) {
  T logits = matmul(q, k);
  if (opts.scale_logits) {
    logits = scale(logits, 1.0 / std::sqrt(static_cast<double>(detail::value_of(q).cols())));
  }
  return row_softmax(logits);
}

template <class T>
struct CoAttended {
  T like;    // m x d
  T follow;  // n x d
};

template <class T>
CoAttended<T> co_attend(const T& u_l, const T& u_f, const SocParamsT<T>& p,
                        const SocOptions& opts = {}) {
  if (detail::value_of(u_l).rows() == 0 || detail::value_of(u_f).rows() == 0) {
    throw EmptyLevelError("co_attend: both levels need at least one row");
  }
  Projected<T> like = project(u_l, p.co_like);
  Projected<T> follow = project(u_f, p.co_follow);
  T like_e = add(matmul(attention_weights(like.q, follow.k, opts), follow.v), u_l);
  T follow_e = add(matmul(attention_weights(follow.q, like.k, opts), like.v), u_f);
  return {like_e, follow_e};
}

// No residual on this layer.
template <class T>
T self_attend(const T& u_e, const ProjectionTripleT<T>& t, const SocOptions& opts = {}) {
  if (detail::value_of(u_e).rows() == 0) throw EmptyLevelError("self_attend: level has no rows");
  Projected<T> pr = project(u_e, t);
  return matmul(attention_weights(pr.q, pr.k, opts), pr.v);
}

// m/(m+n) mean(l_mat) + n/(m+n) mean(f_mat); an empty side drops out.
template <class T>
T pool_interest(const T& l_mat, const T& f_mat) {
  const std::size_t m = detail::value_of(l_mat).rows();
  const std::size_t n = detail::value_of(f_mat).rows();
  if (m + n == 0) throw EmptyLevelError("pool_interest: both levels are empty");
  if (n == 0) return mean_rows(l_mat);
  if (m == 0) return mean_rows(f_mat);
  const double total = static_cast<double>(m + n);
  return add(scale(mean_rows(l_mat), static_cast<double>(m) / total),
             scale(mean_rows(f_mat), static_cast<double>(n) / total));
}

template <class T>
T soc_forward(const T& u_l, const T& u_f, const SocParamsT<T>& p, SocVariant variant,
              const SocOptions& opts = {}) {
  const Matrix& lv = detail::value_of(u_l);
  const Matrix& fv = detail::value_of(u_f);
  const std::size_t d = detail::value_of(p.co_like.w_q).rows();
  if (lv.cols() != d || fv.cols() != d) {
    throw ShapeError("soc_forward: features " + lv.shape_string() + " / " + fv.shape_string() +
                     " vs d=" + std::to_string(d));
  }
  const std::size_t m = lv.rows();
  const std::size_t n = fv.rows();
  if (m == 0 && n == 0) return detail::constant_like(u_l, Matrix(1, d));
  if (variant == SocVariant::kNone) return pool_interest(u_l, u_f);

  T like = u_l;
  T follow = u_f;
  if (m > 0 && n > 0) {
    CoAttended<T> co = co_attend(u_l, u_f, p, opts);
    like = co.like;
    follow = co.follow;
  }
  if (variant == SocVariant::kFull) {
    if (m > 0) like = opts.literal_self ? self_attend(u_l, p.co_like, opts)
                                        : self_attend(like, p.self_like, opts);
    if (n > 0) follow = opts.literal_self ? self_attend(u_f, p.co_follow, opts)
                                          : self_attend(follow, p.self_follow, opts);
  }
  return pool_interest(like, follow);
}

inline InterestVector soc_interest(const Matrix& u_l, const Matrix& u_f, const SocParams& p,
                                   SocVariant variant, const SocOptions& opts = {}) {
  return {soc_forward(u_l, u_f, p, variant, opts)};
}

}  // namespace socrec
