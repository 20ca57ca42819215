#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "socrec/attention.hpp"
#include "socrec/errors.hpp"
#include "support.hpp"

using namespace socrec;
using socrec::testing::random_matrix;
using socrec::testing::to_grid;
namespace oracle = socrec::testing::oracle;

namespace {

SocParams random_params(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_soc_params(d, rng);
}

ProjectionTriple triple(Matrix q, Matrix k, Matrix v) { return {std::move(q), std::move(k), std::move(v)}; }

}  // namespace

TEST_SUITE("soc-attention") {

TEST_CASE("project: identity weights, scalar case and shapes") {
  std::mt19937_64 rng(1);
  const Matrix u = random_matrix(3, 4, rng);
  const auto id = Matrix::identity(4);
  const auto p = project(u, triple(id, id, id));
  CHECK(p.q == u);
  CHECK(p.k == transpose(u));
  CHECK(p.v == u);

  const auto s = project(Matrix{{2.0}}, triple(Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{1.0}}));
  CHECK(s.q == Matrix{{2.0}});
  CHECK(s.k == Matrix{{2.0}});
  CHECK(s.v == Matrix{{2.0}});

  const SocParams params = random_params(4, 2);
  const auto r = project(random_matrix(5, 4, rng), params.co_like);
  CHECK(r.q.rows() == 5);
  CHECK(r.q.cols() == 4);
  CHECK(r.k.rows() == 4);
  CHECK(r.k.cols() == 5);
  CHECK(r.v.rows() == 5);
  CHECK_THROWS_AS((void)project(Matrix(0, 4), params.co_like), EmptyLevelError);
  CHECK_THROWS_AS((void)project(Matrix(2, 3), params.co_like), ShapeError);
}

TEST_CASE("co_attend: single logit") {
  const SocParams p = constant_soc_params(1, 1.0);
  const auto co = co_attend(Matrix{{2.0}}, Matrix{{3.0}}, p);
  CHECK(co.like == Matrix{{5.0}});
  CHECK(co.follow == Matrix{{5.0}});
}

TEST_CASE("co_attend: zero logits give uniform attention") {
  std::mt19937_64 rng(3);
  const std::size_t d = 3;
  SocParams p = constant_soc_params(d, 0.0);
  p.co_like.w_v = Matrix::identity(d);
  p.co_follow.w_v = Matrix::identity(d);
  const Matrix ul = random_matrix(4, d, rng), uf = random_matrix(2, d, rng);
  const auto co = co_attend(ul, uf, p);
  const Matrix mf = mean_rows(uf), ml = mean_rows(ul);
  for (std::size_t r = 0; r < ul.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) CHECK(co.like(r, c) == doctest::Approx(ul(r, c) + mf(0, c)).epsilon(1e-14));
  for (std::size_t r = 0; r < uf.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) CHECK(co.follow(r, c) == doctest::Approx(uf(r, c) + ml(0, c)).epsilon(1e-14));
}

TEST_CASE("co_attend matches a straight-line recomputation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const SocParams p = random_params(4, 100 + trial);
    const Matrix ul = random_matrix(3, 4, rng), uf = random_matrix(2, 4, rng);
    const auto co = co_attend(ul, uf, p);
    const auto g = [](const Matrix& m) { return to_grid(m); };
    const auto like = oracle::plus(
        oracle::attend(g(ul), g(uf), g(p.co_like.w_q), g(p.co_follow.w_k), g(p.co_follow.w_v)), g(ul));
    const auto follow = oracle::plus(
        oracle::attend(g(uf), g(ul), g(p.co_follow.w_q), g(p.co_like.w_k), g(p.co_like.w_v)), g(uf));
    CHECK(testing::max_abs_diff(like, co.like) < 1e-12);
    CHECK(testing::max_abs_diff(follow, co.follow) < 1e-12);
  }
}

TEST_CASE("co_attend requires both levels") {
  const SocParams p = random_params(2, 5);
  CHECK_THROWS_AS((void)co_attend(Matrix(0, 2), Matrix(1, 2), p), EmptyLevelError);
  CHECK_THROWS_AS((void)co_attend(Matrix(1, 2), Matrix(0, 2), p), EmptyLevelError);
}

TEST_CASE("self_attend examples") {
  std::mt19937_64 rng(6);
  const SocParams p = random_params(3, 7);
  const Matrix one = random_matrix(1, 3, rng);
  CHECK(max_abs_diff(self_attend(one, p.self_like), matmul(one, p.self_like.w_v)) < 1e-15);

  const Matrix u = random_matrix(4, 3, rng);
  const auto uniform = self_attend(u, triple(Matrix(3, 3), Matrix(3, 3), Matrix::identity(3)));
  const Matrix mean = mean_rows(u);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(uniform(r, c) == doctest::Approx(mean(0, c)).epsilon(1e-14));

  CHECK_THROWS_AS((void)self_attend(Matrix(0, 3), p.self_like), EmptyLevelError);
}

TEST_CASE("self_attend matches a straight-line recomputation") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const SocParams p = random_params(3, 200 + trial);
    const Matrix u = random_matrix(4, 3, rng);
    const auto g = [](const Matrix& m) { return to_grid(m); };
    const auto expected = oracle::attend(g(u), g(u), g(p.self_like.w_q), g(p.self_like.w_k), g(p.self_like.w_v));
    CHECK(testing::max_abs_diff(expected, self_attend(u, p.self_like)) < 1e-12);
  }
}

TEST_CASE("pool_interest examples") {
  CHECK(pool_interest(Matrix{{5.0}}, Matrix{{5.0}}) == Matrix{{5.0}});
  const Matrix v = pool_interest(Matrix{{1.0, 0.0}, {0.0, 1.0}}, Matrix{{3.0, 3.0}});
  CHECK(v(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(v(0, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(pool_interest(Matrix(0, 2), Matrix{{1.0, 2.0}}) == Matrix{{1.0, 2.0}});
  CHECK(pool_interest(Matrix{{1.0, 2.0}, {3.0, 4.0}}, Matrix(0, 2)) == Matrix{{2.0, 3.0}});
  CHECK_THROWS_AS((void)pool_interest(Matrix(0, 2), Matrix(0, 2)), EmptyLevelError);
}

TEST_CASE("soc_forward examples") {
  const SocParams anything = random_params(2, 9);
  CHECK(soc_forward(Matrix{{1.0, 3.0}}, Matrix{{3.0, 1.0}}, anything, SocVariant::kNone) == Matrix{{2.0, 2.0}});

  const SocParams ones = constant_soc_params(1, 1.0);
  CHECK(soc_forward(Matrix{{2.0}}, Matrix{{3.0}}, ones, SocVariant::kFull) == Matrix{{5.0}});
  CHECK(soc_forward(Matrix{{2.0}}, Matrix{{3.0}}, ones, SocVariant::kCoOnly) == Matrix{{5.0}});

  std::mt19937_64 rng(10);
  const SocParams p = random_params(4, 11);
  const Matrix ul = random_matrix(3, 4, rng), uf = random_matrix(2, 4, rng);
  CHECK(max_abs_diff(soc_forward(ul, uf, p, SocVariant::kFull), soc_forward(ul, uf, p, SocVariant::kCoOnly)) > 1e-6);
}

TEST_CASE("soc_forward: empty levels") {
  std::mt19937_64 rng(12);
  const SocParams p = random_params(3, 13);
  const Matrix ul = random_matrix(2, 3, rng);
  CHECK(soc_forward(Matrix(0, 3), Matrix(0, 3), p, SocVariant::kFull) == Matrix(1, 3));
  // One empty side skips co-attention; full still self-attends the other side.
  CHECK(max_abs_diff(soc_forward(ul, Matrix(0, 3), p, SocVariant::kFull),
                     mean_rows(self_attend(ul, p.self_like))) < 1e-15);
  CHECK(soc_forward(ul, Matrix(0, 3), p, SocVariant::kCoOnly) == mean_rows(ul));
  CHECK_THROWS_AS((void)soc_forward(Matrix(1, 2), Matrix(1, 2), p, SocVariant::kFull), ShapeError);
}

TEST_CASE("soc_forward: option flags") {
  std::mt19937_64 rng(14);
  const SocParams p = random_params(4, 15);
  const Matrix ul = random_matrix(3, 4, rng), uf = random_matrix(2, 4, rng);
  const Matrix plain = soc_forward(ul, uf, p, SocVariant::kFull);
  CHECK(max_abs_diff(plain, soc_forward(ul, uf, p, SocVariant::kFull, {.scale_logits = true})) > 1e-9);

  const Matrix literal = soc_forward(ul, uf, p, SocVariant::kFull, {.literal_self = true});
  const Matrix expected = pool_interest(self_attend(ul, p.co_like), self_attend(uf, p.co_follow));
  CHECK(max_abs_diff(literal, expected) < 1e-15);
}

TEST_CASE("variant none ignores every weight") {
  std::mt19937_64 rng(16);
  const Matrix ul = random_matrix(3, 4, rng), uf = random_matrix(5, 4, rng);
  const Matrix a = soc_forward(ul, uf, random_params(4, 17), SocVariant::kNone);
  const Matrix b = soc_forward(ul, uf, constant_soc_params(4, 9.0), SocVariant::kNone);
  CHECK(a == b);
}

TEST_CASE("permutation properties") {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const SocParams p = random_params(4, 300 + trial);
    const Matrix ul = random_matrix(4, 4, rng), uf = random_matrix(3, 4, rng);
    std::vector<std::size_t> pl(4), pf(3);
    std::iota(pl.begin(), pl.end(), 0);
    std::iota(pf.begin(), pf.end(), 0);
    std::shuffle(pl.begin(), pl.end(), rng);
    std::shuffle(pf.begin(), pf.end(), rng);
    const Matrix ul_p = take_rows(ul, pl), uf_p = take_rows(uf, pf);
    for (SocVariant v : {SocVariant::kFull, SocVariant::kCoOnly, SocVariant::kNone}) {
      CHECK(max_abs_diff(soc_forward(ul, uf, p, v), soc_forward(ul_p, uf_p, p, v)) < 1e-10);
    }
    const auto base = co_attend(ul, uf, p);
    const auto perm = co_attend(ul_p, uf, p);
    CHECK(max_abs_diff(take_rows(base.like, pl), perm.like) < 1e-12);
    CHECK(max_abs_diff(base.follow, perm.follow) < 1e-12);
  }
}

TEST_CASE("init_soc_params stays inside the Glorot range and is seeded") {
  const SocParams a = random_params(8, 19);
  const SocParams b = random_params(8, 19);
  const double limit = std::sqrt(6.0 / 16.0);
  a.for_each([&](const Matrix& w) {
    for (double x : w.data()) CHECK(std::abs(x) <= limit);
  });
  std::vector<Matrix> wa, wb;
  a.for_each([&](const Matrix& w) { wa.push_back(w); });
  b.for_each([&](const Matrix& w) { wb.push_back(w); });
  CHECK(wa == wb);
  CHECK(soc_matrix_names().front() == "co_like.w_q");
  CHECK(soc_matrix_names().back() == "self_follow.w_v");
}

TEST_CASE("variant names") {
  CHECK(parse_variant("full") == SocVariant::kFull);
  CHECK(parse_variant("co_only") == SocVariant::kCoOnly);
  CHECK(parse_variant("none") == SocVariant::kNone);
  CHECK_THROWS_AS((void)parse_variant("self_only"), ConfigError);
  CHECK(to_string(SocVariant::kCoOnly) == "co_only");
}

}  // TEST_SUITE
