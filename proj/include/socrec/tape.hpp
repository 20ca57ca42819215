#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "socrec/matrix.hpp"

namespace socrec {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class Op {
  kLeaf,
  kMatmul,
  kTranspose,
  kAdd,
  kScale,
  kRowSoftmax,
  kMeanRows,
  kSum,
  kSquaredNorm,
  kTanh,
  kConcatCols,
  kAddRowBroadcast,
  kRepeatRows,
  kStackRows,
  kBceWithLogits,
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
// every node's inputs precede it and a single reverse sweep is a valid
// topological traversal. One tape per forward pass; not thread-safe.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse sweep from a 1x1 loss. Afterwards grad(p) is defined for every
  // parameter p; parameters the loss does not depend on get zeros.
  void backward(Var loss);
  // Valid after backward(). Zeros for nodes the loss does not reach.
  const Matrix& grad(Var v) const;

  // Used by the op functions below; not meant for direct use.
  Var record(Matrix value, Op op, std::vector<std::size_t> inputs, double scalar = 0.0,
             std::vector<double> extra = {});

 private:
  struct Node {
    Matrix value;
    Op op = Op::kLeaf;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    double scalar = 0.0;
    std::vector<double> extra;
  };

  void accumulate(std::size_t id, const Matrix& delta);
  Matrix& grad_slot(std::size_t id);
  void propagate(std::size_t id);

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  bool has_grads_ = false;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

// Taped primitives. Output is differentiable if any input is.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var scale(Var a, double s);
Var row_softmax(Var a);
Var mean_rows(Var a);
Var sum(Var a);
Var squared_norm(Var a);
Var tanh(Var a);
Var concat_cols(std::span<const Var> parts);
// a: m x n, row: 1 x n; adds row to every row of a.
Var add_row_broadcast(Var a, Var row);
Var repeat_rows(Var row, std::size_t count);
Var vstack(Var top, Var bottom);
// Concatenates row blocks with equal column counts.
Var stack_rows(std::span<const Var> parts);
// Mean binary cross-entropy of a column of logits against 0/1 labels, in the
// stable form max(z,0) - z*y + log1p(exp(-|z|)).
Var bce_with_logits(Var logits, std::span<const double> labels);

}  // namespace socrec
