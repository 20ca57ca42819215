#pragma once

// Batched scoring and gradient accumulation.
//
// Each function has an OpenMP implementation and a *_serial reference. Work is
// split per user group and reduced in group order, so both produce identical
// bits for any thread count.

#include <cstddef>
#include <exception>
#include <span>
#include <utility>
#include <vector>

#include "socrec/model.hpp"

namespace socrec {

struct ScoringPair {
  const UserHistory* history = nullptr;
  std::size_t candidate = 0;
};

// Probabilities, in input order. Errors carry the failing pair index.
std::vector<double> predict_batch(const ScaaModel& model, std::span<const ScoringPair> pairs);
std::vector<double> predict_batch_serial(const ScaaModel& model, std::span<const ScoringPair> pairs);

// All examples of one user inside a minibatch.
struct UserGroup {
  std::size_t user = 0;
  std::vector<std::size_t> items;
  std::vector<double> labels;
};

struct BatchGradients {
  double loss_sum = 0.0;       // summed BCE over the batch's examples
  std::size_t examples = 0;
  // Gradient of the batch-mean loss, aligned with ScaaModel::parameters()
  // minus the item table.
  std::vector<Matrix> dense;
  // Item-table rows touched by the batch (empty if the table is frozen),
  // sorted by item id.
  std::vector<std::pair<std::size_t, Matrix>> item_rows;
};

// Loss and gradient of the mean BCE over all examples in `groups`.
BatchGradients batch_gradients(const ScaaModel& model, std::span<const UserHistory> histories,
                               std::span<const UserGroup> groups);
BatchGradients batch_gradients_serial(const ScaaModel& model,
                                      std::span<const UserHistory> histories,
                                      std::span<const UserGroup> groups);

// Per-group work shared by both implementations.
namespace detail {

struct GroupGradients {
  double loss_sum = 0.0;
  std::vector<Matrix> dense;
  std::vector<std::pair<std::size_t, Matrix>> item_rows;
};

GroupGradients group_gradients(const ScaaModel& model, const UserHistory& history,
                               const UserGroup& group, double weight);
BatchGradients reduce_groups(const ScaaModel& model, std::span<GroupGradients> parts,
                             std::size_t examples);
double pair_probability(const ScaaModel& model, const ScoringPair& pair);
[[noreturn]] void rethrow_with_index(std::exception_ptr error, std::size_t index);

}  // namespace detail

// Caps OpenMP threads for the batch kernels; 0 leaves the runtime default.
void set_thread_limit(int threads);
int thread_limit();
// Team size the kernels actually request.
int effective_threads();

}  // namespace socrec
