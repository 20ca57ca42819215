#include <doctest.h>

#include <random>

#include "socrec/batch.hpp"
#include "socrec/errors.hpp"
#include "socrec/model.hpp"
#include "socrec/tape.hpp"
#include "support.hpp"

using namespace socrec;

namespace {

ScaaModel small_model(std::uint64_t seed, SocVariant variant = SocVariant::kFull, bool use_soc = true) {
  ModelShape shape;
  shape.item_count = 20;
  shape.d = 4;
  shape.variant = variant;
  shape.use_soc = use_soc;
  return init_model(shape, seed);
}

}  // namespace

TEST_SUITE("model-scaa") {

TEST_CASE("build_level_features examples") {
  const ScaaModel model = small_model(1);
  UserHistory h;
  h.clicked = {1, 2};
  LevelInputs in = build_level_features(h, model.items);
  CHECK(in.like.rows() == 0);
  CHECK(in.follow.rows() == 0);
  CHECK(in.click_context == mean_rows(take_rows(model.items.embeddings, h.clicked)));

  h.liked = {3};
  in = build_level_features(h, model.items);
  CHECK(in.like == Matrix::row_vector(model.items.embeddings.row(3)));

  h.liked = {3, 5, 3, 5, 3};
  in = build_level_features(h, model.items);
  CHECK(in.like.rows() == 2);

  UserHistory none;
  CHECK(build_level_features(none, model.items).click_context == Matrix(1, 4));

  UserHistory bad;
  bad.followed = {20};
  CHECK_THROWS_AS((void)build_level_features(bad, model.items), IndexError);
}

TEST_CASE("dedup_ids keeps first occurrences in order") {
  const std::vector<std::size_t> ids{4, 1, 4, 2, 1};
  CHECK(dedup_ids(ids) == std::vector<std::size_t>{4, 1, 2});
}

TEST_CASE("zero head gives probability one half") {
  ScaaModel model = small_model(2);
  for (Matrix* m : {&model.head.w1, &model.head.b1, &model.head.w2, &model.head.b2}) *m = Matrix(m->rows(), m->cols());
  std::mt19937_64 rng(3);
  const auto user = testing::random_user(20, 3, 2, 4, rng);
  CHECK(score(model, user.history, 7) == 0.0);
  CHECK(logistic(score(model, user.history, 7)) == 0.5);
}

TEST_CASE("without the SoC path likes and follows are ignored") {
  const ScaaModel model = small_model(4, SocVariant::kFull, false);
  std::mt19937_64 rng(5);
  auto user = testing::random_user(20, 3, 2, 5, rng);
  const auto before = score_candidates(model, user.history, user.candidates);
  user.history.liked = {0, 1, 2, 3, 4, 5};
  user.history.followed = {9};
  CHECK(score_candidates(model, user.history, user.candidates) == before);
}

TEST_CASE("probabilities are finite and strictly inside (0, 1)") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const ScaaModel model = small_model(100 + trial);
    const auto user = testing::random_user(20, 1 + trial % 4, trial % 3, 6, rng);
    for (double z : score_candidates(model, user.history, user.candidates)) {
      const double p = logistic(z);
      CHECK(std::isfinite(p));
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("zero SoC weights keep the score finite") {
  ScaaModel model = small_model(7);
  model.soc = constant_soc_params(4, 0.0);
  std::mt19937_64 rng(8);
  const auto user = testing::random_user(20, 3, 2, 3, rng);
  for (double z : score_candidates(model, user.history, user.candidates)) CHECK(std::isfinite(z));
}

TEST_CASE("variants built from one seed share every non-SoC draw") {
  const ScaaModel full = small_model(9, SocVariant::kFull);
  const ScaaModel none = small_model(9, SocVariant::kNone);
  const ScaaModel base = small_model(9, SocVariant::kFull, false);
  CHECK(full.items.embeddings == none.items.embeddings);
  CHECK(full.head.w1 == none.head.w1);
  CHECK(full.head.w1 == base.head.w1);
  CHECK(full.head.w2 == base.head.w2);
}

TEST_CASE("score_on_tape agrees with the plain path") {
  std::mt19937_64 rng(10);
  for (SocVariant v : {SocVariant::kFull, SocVariant::kCoOnly, SocVariant::kNone}) {
    const ScaaModel model = small_model(11, v);
    const auto user = testing::random_user(20, 3, 2, 5, rng);
    Tape tape;
    const ModelVars vars = bind_parameters(tape, model);
    const Var logits = score_on_tape(model, vars, user.history, user.candidates, [&](std::size_t i) {
      return tape.constant(Matrix::row_vector(model.items.embeddings.row(i)));
    });
    const auto plain = score_candidates(model, user.history, user.candidates);
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(logits.value()(i, 0) == doctest::Approx(plain[i]).epsilon(1e-13));
  }
}

TEST_CASE("parameter list order and names") {
  ScaaModel model = small_model(12);
  const auto names = model.parameter_names();
  CHECK(names.size() == 17);
  CHECK(names[12] == "head.w1");
  CHECK(names.back() == "items.embeddings");
  CHECK(model.parameters().size() == 17);
  use_external_features(model, Matrix(20, 4, 0.5));
  CHECK_FALSE(model.items.trainable);
  CHECK(model.parameters().size() == 16);
  CHECK_THROWS_AS(use_external_features(model, Matrix(20, 3)), ShapeError);
}

}  // TEST_SUITE

TEST_SUITE("batch") {

TEST_CASE("predict_batch examples") {
  const ScaaModel model = small_model(20);
  std::mt19937_64 rng(21);
  const auto a = testing::random_user(20, 3, 2, 1, rng);
  const auto b = testing::random_user(20, 2, 1, 1, rng);
  const std::vector<ScoringPair> one{{&a.history, 4}};
  CHECK(predict_batch(model, one).front() == logistic(score(model, a.history, 4)));

  const std::vector<ScoringPair> pairs{{&a.history, 4}, {&b.history, 9}, {&a.history, 4}};
  const std::vector<ScoringPair> swapped{{&b.history, 9}, {&a.history, 4}, {&a.history, 4}};
  const auto p = predict_batch(model, pairs);
  const auto q = predict_batch(model, swapped);
  CHECK(p[0] == q[1]);
  CHECK(p[1] == q[0]);
  CHECK(p[0] == p[2]);
}

TEST_CASE("predict_batch errors carry the pair index") {
  const ScaaModel model = small_model(22);
  UserHistory h;
  h.liked = {1};
  const std::vector<ScoringPair> pairs{{&h, 1}, {&h, 2}, {&h, 99}};
  try {
    (void)predict_batch(model, pairs);
    FAIL("expected IndexError");
  } catch (const IndexError& e) {
    CHECK(std::string(e.what()).find("pair 2") != std::string::npos);
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial references") {
  std::mt19937_64 rng(23);
  for (int threads : {1, 2, 3, 8}) {
    set_thread_limit(threads);
    for (bool trainable : {true, false}) {
      ScaaModel model = small_model(24);
      if (!trainable) use_external_features(model, testing::random_matrix(20, 4, rng));
      std::vector<UserHistory> histories;
      std::vector<UserGroup> groups;
      for (std::size_t u = 0; u < 9; ++u) {
        const auto user = testing::random_user(20, u % 4, (u + 1) % 3, 3, rng);
        histories.push_back(user.history);
        UserGroup g{u, user.candidates, {}};
        for (std::size_t i = 0; i < g.items.size(); ++i) g.labels.push_back(static_cast<double>((u + i) % 2));
        groups.push_back(g);
      }
      std::vector<ScoringPair> pairs;
      for (const auto& g : groups)
        for (std::size_t item : g.items) pairs.push_back({&histories[g.user], item});
      CHECK(predict_batch(model, pairs) == predict_batch_serial(model, pairs));

      const BatchGradients par = batch_gradients(model, histories, groups);
      const BatchGradients ser = batch_gradients_serial(model, histories, groups);
      CHECK(par.loss_sum == ser.loss_sum);
      CHECK(par.examples == ser.examples);
      CHECK(par.dense == ser.dense);
      CHECK(par.item_rows == ser.item_rows);
      CHECK(par.item_rows.empty() == !trainable);
    }
  }
  set_thread_limit(0);
}

TEST_CASE("batch_gradients matches a per-example tape") {
  const ScaaModel model = small_model(25);
  std::mt19937_64 rng(26);
  const auto user = testing::random_user(20, 3, 2, 4, rng);
  const std::vector<UserHistory> histories{user.history};
  const std::vector<UserGroup> groups{{0, user.candidates, {1.0, 0.0, 0.0, 1.0}}};
  const BatchGradients g = batch_gradients_serial(model, histories, groups);

  Tape tape;
  const ModelVars vars = bind_parameters(tape, model);
  const Var logits = score_on_tape(model, vars, user.history, user.candidates, [&](std::size_t i) {
    return tape.constant(Matrix::row_vector(model.items.embeddings.row(i)));
  });
  const std::vector<double> labels{1.0, 0.0, 0.0, 1.0};
  const Var loss = bce_with_logits(logits, labels);
  tape.backward(loss);
  CHECK(g.loss_sum == doctest::Approx(loss.value()(0, 0) * 4.0).epsilon(1e-13));
  CHECK(max_abs_diff(g.dense[12], tape.grad(vars.w1)) < 1e-14);
  CHECK(max_abs_diff(g.dense[15], tape.grad(vars.b2)) < 1e-14);
}

}  // TEST_SUITE
