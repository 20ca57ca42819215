#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "socrec/batch.hpp"
#include "socrec/data.hpp"
#include "socrec/model.hpp"

namespace socrec {

// Mean binary cross-entropy from logits, stable for large |z|.
double bce_loss(std::span<const double> logits, std::span<const double> labels);

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind k);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  AdamConfig adam;
  std::uint64_t seed = 7;

  void validate() const;
};

// SGD or bias-corrected Adam over a fixed list of parameter matrices.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, AdamConfig adam = {});

  // params[i] -= update(grads[i]). Shapes must match pairwise.
  void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

  std::size_t steps() const noexcept { return t_; }

 private:
  OptimizerKind kind_;
  double lr_;
  AdamConfig adam_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct TrainResult {
  // Entry 0 is the mean loss before any update; entry e the mean minibatch
  // loss observed during epoch e.
  std::vector<double> loss_curve;
};

// Minibatches of shuffled exposures; each batch is grouped per user so the
// interest vector is built once per user per batch.
TrainResult train(ScaaModel& model, std::span<const UserHistory> histories,
                  std::span<const Example> examples, const TrainConfig& cfg);

// Mean BCE of the model over the examples, no updates.
double mean_loss(const ScaaModel& model, std::span<const UserHistory> histories,
                 std::span<const Example> examples);

// Groups examples by user; groups appear in order of each user's first example.
std::vector<UserGroup> group_by_user(std::span<const Example> examples);

void save_loss_curve(const TrainResult& result, const std::filesystem::path& path);

}  // namespace socrec
