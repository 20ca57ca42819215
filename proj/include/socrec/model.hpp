#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "socrec/attention.hpp"
#include "socrec/matrix.hpp"
#include "socrec/tape.hpp"

namespace socrec {

// Per-item feature rows. Row i belongs to the item with internal id i.
struct ItemTable {
  Matrix embeddings;       // item_count x d
  bool trainable = true;   // false when features come from an external file

  std::size_t count() const noexcept { return embeddings.rows(); }
  std::size_t dim() const noexcept { return embeddings.cols(); }
};

// One user's interaction history, as internal item ids in chronological order.
struct UserHistory {
  std::vector<std::size_t> clicked;
  std::vector<std::size_t> liked;
  std::vector<std::size_t> followed;
};

// Keeps the first occurrence of each id, preserving order.
std::vector<std::size_t> dedup_ids(std::span<const std::size_t> ids);

// 3d -> h -> 1 perceptron with a tanh hidden layer.
struct MlpHead {
  Matrix w1;  // 3d x h
  Matrix b1;  // 1 x h
  Matrix w2;  // h x 1
  Matrix b2;  // 1 x 1

  std::size_t hidden() const noexcept { return w1.cols(); }
};

struct ScaaModel {
  ItemTable items;
  SocParams soc;
  MlpHead head;
  SocVariant variant = SocVariant::kFull;
  bool use_soc = true;
  SocOptions soc_options;

  std::size_t dim() const noexcept { return items.dim(); }

  // Dense trainable parameters in a fixed order: the twelve SoC matrices,
  // w1, b1, w2, b2 and, when trainable, the item table.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<std::string> parameter_names() const;
};

struct ModelShape {
  std::size_t item_count = 0;
  std::size_t d = 16;
  std::size_t hidden = 0;  // 0 selects 2d
  SocVariant variant = SocVariant::kFull;
  bool use_soc = true;
  SocOptions soc_options;
};

// Draws, in order: item table (N(0, 1/d)), the twelve SoC matrices, then the
// head (uniform Glorot-style ranges, zero biases). Variants built from the same
// seed share every draw.
ScaaModel init_model(const ModelShape& shape, std::uint64_t seed);

// Replaces the item table with externally supplied features and freezes it.
void use_external_features(ScaaModel& model, Matrix features);

struct LevelInputs {
  Matrix like;           // m x d, m may be zero
  Matrix follow;         // n x d
  Matrix click_context;  // 1 x d, zeros if no clicks
};

LevelInputs build_level_features(const UserHistory& h, const ItemTable& items);

double logistic(double z);

// Logit for one candidate.
double score(const ScaaModel& model, const UserHistory& h, std::size_t candidate);
// Logits for several candidates of one user; the interest vector is computed once.
std::vector<double> score_candidates(const ScaaModel& model, const UserHistory& h,
                                     std::span<const std::size_t> candidates);

// Parameter leaves of a model bound onto one tape.
struct ModelVars {
  SocParamsT<Var> soc;
  Var w1, b1, w2, b2;
};

ModelVars bind_parameters(Tape& tape, const ScaaModel& model);

// Column of logits (c x 1) for one user's candidates, recorded on `tape`.
// `item_row` maps an item id to its 1 x d row on the tape.
using ItemRowFn = std::function<Var(std::size_t item)>;

Var score_on_tape(const ScaaModel& model, const ModelVars& vars, const UserHistory& h,
                  std::span<const std::size_t> candidates, const ItemRowFn& item_row);

}  // namespace socrec
