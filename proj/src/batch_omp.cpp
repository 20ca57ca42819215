#include <exception>

#include "socrec/batch.hpp"
#include "socrec/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace socrec {

namespace {

int g_thread_limit = 0;

}  // namespace

void set_thread_limit(int threads) { g_thread_limit = threads < 0 ? 0 : threads; }
int thread_limit() { return g_thread_limit; }

int effective_threads() {
#ifdef _OPENMP
  return g_thread_limit > 0 ? g_thread_limit : omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<double> predict_batch(const ScaaModel& model, std::span<const ScoringPair> pairs) {
  std::vector<double> out(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());

#pragma omp parallel for schedule(dynamic, 16) num_threads(effective_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = detail::pair_probability(model, pairs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) detail::rethrow_with_index(errors[i], i);
  }
  return out;
}

BatchGradients batch_gradients(const ScaaModel& model, std::span<const UserHistory> histories,
                               std::span<const UserGroup> groups) {
  std::size_t examples = 0;
  for (const auto& g : groups) {
    if (g.user >= histories.size()) throw IndexError("batch_gradients: unknown user");
    examples += g.items.size();
  }
  if (examples == 0) throw ContractError("batch_gradients: empty batch");

  std::vector<detail::GroupGradients> parts(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());
  const auto n = static_cast<std::ptrdiff_t>(groups.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(effective_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& g = groups[i];
      const double weight = static_cast<double>(g.items.size()) / static_cast<double>(examples);
      parts[i] = detail::group_gradients(model, histories[g.user], g, weight);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  // Reduction stays serial and in group order.
  return detail::reduce_groups(model, parts, examples);
}

}  // namespace socrec
