#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "socrec/matrix.hpp"
#include "socrec/tape.hpp"

namespace socrec {

// Builds a scalar (1x1) loss on `tape` from parameter leaves bound in the same
// order as the matrices handed to grad_check.
using ScalarGraph = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Reverse-mode gradients of `f` at `params`, one matrix per parameter.
std::vector<Matrix> analytic_gradients(const ScalarGraph& f, std::span<const Matrix> params);

// Central-difference gradients (f(x+eps) - f(x-eps)) / (2 eps), evaluated
// independently of the tape's backward rules.
std::vector<Matrix> numeric_gradients(const ScalarGraph& f, std::span<const Matrix> params,
                                      double eps);

// Compares given analytic gradients against central differences. Relative
// error per component is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult compare_gradients(std::span<const Matrix> analytic,
                                  std::span<const Matrix> numeric);

// analytic_gradients vs numeric_gradients. eps must lie in (0, 1e-2].
GradCheckResult grad_check(const ScalarGraph& f, std::span<const Matrix> params, double eps = 1e-5);

}  // namespace socrec
