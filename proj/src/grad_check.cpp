#include "socrec/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "socrec/errors.hpp"

namespace socrec {

namespace {

double evaluate(const ScalarGraph& f, std::span<const Matrix> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.constant(p));
  Var out = f(tape, vars);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractError("grad_check: function must return a 1x1 value, got " +
                        out.value().shape_string());
  }
  const double value = out.value()(0, 0);
  if (!std::isfinite(value)) throw NumericError("grad_check: non-finite function value");
  return value;
}

}  // namespace

std::vector<Matrix> analytic_gradients(const ScalarGraph& f, std::span<const Matrix> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.parameter(p));
  Var loss = f(tape, vars);
  if (!loss.value().all_finite()) throw NumericError("grad_check: non-finite function value");
  tape.backward(loss);
  std::vector<Matrix> grads;
  grads.reserve(vars.size());
  for (Var v : vars) grads.push_back(tape.grad(v));
  return grads;
}

std::vector<Matrix> numeric_gradients(const ScalarGraph& f, std::span<const Matrix> params,
                                      double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw DomainError("grad_check: eps must lie in (0, 1e-2]");
  std::vector<Matrix> work(params.begin(), params.end());
  std::vector<Matrix> grads;
  grads.reserve(work.size());
  for (std::size_t p = 0; p < work.size(); ++p) {
    Matrix g(work[p].rows(), work[p].cols());
    for (std::size_t i = 0; i < work[p].size(); ++i) {
      double& x = work[p].data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = evaluate(f, work);
      x = saved - eps;
      const double down = evaluate(f, work);
      x = saved;
      g.data()[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

GradCheckResult compare_gradients(std::span<const Matrix> analytic,
                                  std::span<const Matrix> numeric) {
  if (analytic.size() != numeric.size()) throw ShapeError("grad_check: parameter count mismatch");
  GradCheckResult result;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    if (!analytic[p].same_shape(numeric[p])) {
      throw ShapeError("grad_check: gradient " + analytic[p].shape_string() + " vs " +
                       numeric[p].shape_string());
    }
    for (std::size_t i = 0; i < analytic[p].size(); ++i) {
      const double a = analytic[p].data()[i];
      const double n = numeric[p].data()[i];
      const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
      const double rel = std::abs(a - n) / denom;
      if (rel > result.max_relative_error) {
        result = {rel, p, i, a, n};
      }
    }
  }
  return result;
}

GradCheckResult grad_check(const ScalarGraph& f, std::span<const Matrix> params, double eps) {
  auto numeric = numeric_gradients(f, params, eps);
  auto analytic = analytic_gradients(f, params);
  return compare_gradients(analytic, numeric);
}

}  // namespace socrec
