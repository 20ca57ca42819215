#include <algorithm>
#include <exception>
#include <map>

#include "socrec/batch.hpp"
#include "socrec/errors.hpp"

namespace socrec {

namespace detail {

GroupGradients group_gradients(const ScaaModel& model, const UserHistory& history,
                               const UserGroup& group, double weight) {
  Tape tape;
  const ModelVars vars = bind_parameters(tape, model);
  // Sorted so item_rows comes out ordered by id.
  std::map<std::size_t, Var> rows;
  auto item_row = [&](std::size_t id) -> Var {
    auto it = rows.find(id);
    if (it != rows.end()) return it->second;
    const auto src = model.items.embeddings.row(id);
    Matrix row = Matrix::row_vector(src);
    Var v = model.items.trainable ? tape.parameter(std::move(row)) : tape.constant(std::move(row));
    rows.emplace(id, v);
    return v;
  };
  Var logits = score_on_tape(model, vars, history, group.items, item_row);
  Var bce = bce_with_logits(logits, group.labels);
  tape.backward(scale(bce, weight));

  GroupGradients out;
  out.loss_sum = bce.value()(0, 0) * static_cast<double>(group.items.size());
  vars.soc.for_each([&](const Var& w) { out.dense.push_back(tape.grad(w)); });
  for (Var v : {vars.w1, vars.b1, vars.w2, vars.b2}) out.dense.push_back(tape.grad(v));
  if (model.items.trainable) {
    for (const auto& [id, v] : rows) out.item_rows.emplace_back(id, tape.grad(v));
  }
  return out;
}

BatchGradients reduce_groups(const ScaaModel& model, std::span<GroupGradients> parts,
                             std::size_t examples) {
  BatchGradients out;
  out.examples = examples;
  for (const Matrix* p : model.parameters()) {
    if (p != &model.items.embeddings) out.dense.emplace_back(p->rows(), p->cols());
  }
  std::map<std::size_t, Matrix> items;
  for (GroupGradients& part : parts) {
    out.loss_sum += part.loss_sum;
    for (std::size_t i = 0; i < out.dense.size(); ++i) {
      auto dst = out.dense[i].data();
      auto src = part.dense[i].data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    for (auto& [id, g] : part.item_rows) {
      auto [it, inserted] = items.try_emplace(id, std::move(g));
      if (!inserted) {
        auto dst = it->second.data();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += g.data()[j];
      }
    }
  }
  out.item_rows.assign(std::make_move_iterator(items.begin()), std::make_move_iterator(items.end()));
  return out;
}

double pair_probability(const ScaaModel& model, const ScoringPair& pair) {
  if (pair.history == nullptr) throw ContractError("scoring pair without history");
  return logistic(score(model, *pair.history, pair.candidate));
}

void rethrow_with_index(std::exception_ptr error, std::size_t index) {
  const std::string prefix = "pair " + std::to_string(index) + ": ";
  try {
    std::rethrow_exception(error);
  } catch (const IndexError& e) {
    throw IndexError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const ContractError& e) {
    throw ContractError(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

}  // namespace detail

std::vector<double> predict_batch_serial(const ScaaModel& model,
                                         std::span<const ScoringPair> pairs) {
  std::vector<double> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      out[i] = detail::pair_probability(model, pairs[i]);
    } catch (...) {
      detail::rethrow_with_index(std::current_exception(), i);
    }
  }
  return out;
}

BatchGradients batch_gradients_serial(const ScaaModel& model,
                                      std::span<const UserHistory> histories,
                                      std::span<const UserGroup> groups) {
  std::size_t examples = 0;
  for (const auto& g : groups) examples += g.items.size();
  if (examples == 0) throw ContractError("batch_gradients: empty batch");
  std::vector<detail::GroupGradients> parts;
  parts.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.user >= histories.size()) throw IndexError("batch_gradients: unknown user");
    const double weight = static_cast<double>(g.items.size()) / static_cast<double>(examples);
    parts.push_back(detail::group_gradients(model, histories[g.user], g, weight));
  }
  return detail::reduce_groups(model, parts, examples);
}

}  // namespace socrec
