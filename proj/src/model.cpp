#include "socrec/model.hpp"

#include <cmath>
#include <random>
#include <unordered_set>

#include "socrec/errors.hpp"

namespace socrec {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = dist(rng);
  return m;
}

Matrix gather(const ItemTable& items, std::span<const std::size_t> ids) {
  Matrix out(ids.size(), items.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= items.count()) {
      throw IndexError("item id " + std::to_string(ids[i]) + " out of range (item_count=" +
                       std::to_string(items.count()) + ")");
    }
    auto src = items.embeddings.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void check_head(const ScaaModel& model) {
  const std::size_t d = model.dim();
  const MlpHead& h = model.head;
  if (h.w1.rows() != 3 * d || h.b1.rows() != 1 || h.b1.cols() != h.w1.cols() ||
      h.w2.rows() != h.w1.cols() || h.w2.cols() != 1 || h.b2.rows() != 1 || h.b2.cols() != 1) {
    throw ShapeError("head shapes do not match d=" + std::to_string(d) + ": w1 " +
                     h.w1.shape_string() + ", w2 " + h.w2.shape_string());
  }
  if (model.use_soc && model.variant != SocVariant::kNone && soc_dim(model.soc) != d) {
    throw ShapeError("SoC weights are " + std::to_string(soc_dim(model.soc)) +
                     "-dimensional but items are " + std::to_string(d) + "-dimensional");
  }
}

}  // namespace

std::vector<std::size_t> dedup_ids(std::span<const std::size_t> ids) {
  std::vector<std::size_t> out;
  std::unordered_set<std::size_t> seen;
  for (std::size_t id : ids) {
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

std::vector<Matrix*> ScaaModel::parameters() {
  std::vector<Matrix*> out;
  soc.for_each([&](Matrix& w) { out.push_back(&w); });
  out.insert(out.end(), {&head.w1, &head.b1, &head.w2, &head.b2});
  if (items.trainable) out.push_back(&items.embeddings);
  return out;
}

std::vector<const Matrix*> ScaaModel::parameters() const {
  std::vector<const Matrix*> out;
  soc.for_each([&](const Matrix& w) { out.push_back(&w); });
  out.insert(out.end(), {&head.w1, &head.b1, &head.w2, &head.b2});
  if (items.trainable) out.push_back(&items.embeddings);
  return out;
}

std::vector<std::string> ScaaModel::parameter_names() const {
  std::vector<std::string> out(soc_matrix_names().begin(), soc_matrix_names().end());
  out.insert(out.end(), {"head.w1", "head.b1", "head.w2", "head.b2"});
  if (items.trainable) out.push_back("items.embeddings");
  return out;
}

ScaaModel init_model(const ModelShape& shape, std::uint64_t seed) {
  if (shape.d == 0) throw ConfigError("model dimension d must be at least 1");
  const std::size_t d = shape.d;
  const std::size_t h = shape.hidden == 0 ? 2 * d : shape.hidden;
  std::mt19937_64 rng(seed);

  ScaaModel model;
  model.variant = shape.variant;
  model.use_soc = shape.use_soc;
  model.soc_options = shape.soc_options;

  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  model.items.embeddings = Matrix(shape.item_count, d);
  for (double& x : model.items.embeddings.data()) x = normal(rng);

  model.soc = init_soc_params(d, rng);

  model.head.w1 = uniform_matrix(3 * d, h, std::sqrt(6.0 / static_cast<double>(3 * d + h)), rng);
  model.head.b1 = Matrix(1, h);
  model.head.w2 = uniform_matrix(h, 1, std::sqrt(6.0 / static_cast<double>(h + 1)), rng);
  model.head.b2 = Matrix(1, 1);
  return model;
}

void use_external_features(ScaaModel& model, Matrix features) {
  if (features.cols() != model.dim()) {
    throw ShapeError("item features are " + std::to_string(features.cols()) +
                     "-dimensional, model expects d=" + std::to_string(model.dim()));
  }
  model.items.embeddings = std::move(features);
  model.items.trainable = false;
}

LevelInputs build_level_features(const UserHistory& h, const ItemTable& items) {
  LevelInputs in;
  in.like = gather(items, dedup_ids(h.liked));
  in.follow = gather(items, dedup_ids(h.followed));
  const auto clicked = dedup_ids(h.clicked);
  in.click_context = clicked.empty() ? Matrix(1, items.dim()) : mean_rows(gather(items, clicked));
  return in;
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> score_candidates(const ScaaModel& model, const UserHistory& h,
                                     std::span<const std::size_t> candidates) {
  check_head(model);
  const std::size_t d = model.dim();
  const LevelInputs in = build_level_features(h, model.items);
  Matrix v(1, d);
  if (model.use_soc) {
    v = soc_forward(in.like, in.follow, model.soc, model.variant, model.soc_options);
  }
  const MlpHead& head = model.head;
  const std::size_t hidden = head.hidden();

  // The v and context thirds of the hidden pre-activation are shared by every candidate.
  std::vector<double> shared(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    double acc = head.b1(0, j);
    for (std::size_t k = 0; k < d; ++k) {
      acc += v(0, k) * head.w1(k, j) + in.click_context(0, k) * head.w1(d + k, j);
    }
    shared[j] = acc;
  }

  const Matrix cand = gather(model.items, candidates);
  std::vector<double> logits(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double z = head.b2(0, 0);
    for (std::size_t j = 0; j < hidden; ++j) {
      double acc = shared[j];
      for (std::size_t k = 0; k < d; ++k) acc += cand(c, k) * head.w1(2 * d + k, j);
      z += std::tanh(acc) * head.w2(j, 0);
    }
    logits[c] = z;
  }
  return logits;
}

double score(const ScaaModel& model, const UserHistory& h, std::size_t candidate) {
  const std::size_t ids[] = {candidate};
  return score_candidates(model, h, ids).front();
}

ModelVars bind_parameters(Tape& tape, const ScaaModel& model) {
  ModelVars vars;
  auto bind = [&](const ProjectionTriple& src, ProjectionTripleT<Var>& dst) {
    dst.w_q = tape.parameter(src.w_q);
    dst.w_k = tape.parameter(src.w_k);
    dst.w_v = tape.parameter(src.w_v);
  };
  bind(model.soc.co_like, vars.soc.co_like);
  bind(model.soc.co_follow, vars.soc.co_follow);
  bind(model.soc.self_like, vars.soc.self_like);
  bind(model.soc.self_follow, vars.soc.self_follow);
  vars.w1 = tape.parameter(model.head.w1);
  vars.b1 = tape.parameter(model.head.b1);
  vars.w2 = tape.parameter(model.head.w2);
  vars.b2 = tape.parameter(model.head.b2);
  return vars;
}

Var score_on_tape(const ScaaModel& model, const ModelVars& vars, const UserHistory& h,
                  std::span<const std::size_t> candidates, const ItemRowFn& item_row) {
  check_head(model);
  if (candidates.empty()) throw ContractError("score_on_tape: no candidates");
  Tape& tape = vars.w1.tape();
  const std::size_t d = model.dim();

  auto stack = [&](std::span<const std::size_t> ids) -> Var {
    if (ids.empty()) return tape.constant(Matrix(0, d));
    std::vector<Var> rows;
    rows.reserve(ids.size());
    for (std::size_t id : ids) {
      if (id >= model.items.count()) {
        throw IndexError("item id " + std::to_string(id) + " out of range (item_count=" +
                         std::to_string(model.items.count()) + ")");
      }
      rows.push_back(item_row(id));
    }
    return stack_rows(rows);
  };

  const auto liked = dedup_ids(h.liked);
  const auto followed = dedup_ids(h.followed);
  const auto clicked = dedup_ids(h.clicked);

  Var v = tape.constant(Matrix(1, d));
  if (model.use_soc) {
    v = soc_forward(stack(liked), stack(followed), vars.soc, model.variant, model.soc_options);
  }
  Var context = clicked.empty() ? tape.constant(Matrix(1, d)) : mean_rows(stack(clicked));
  Var cand = stack(candidates);
  const std::size_t c = candidates.size();
  const Var parts[] = {repeat_rows(v, c), repeat_rows(context, c), cand};
  Var x = concat_cols(parts);
  Var hidden = tanh(add_row_broadcast(matmul(x, vars.w1), vars.b1));
  return add_row_broadcast(matmul(hidden, vars.w2), vars.b2);
}

}  // namespace socrec
