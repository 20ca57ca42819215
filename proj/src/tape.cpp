#include "socrec/tape.hpp"

#include <algorithm>
#include <cmath>

#include "socrec/errors.hpp"

namespace socrec {

namespace {

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
  return a.tape();
}

double stable_bce(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::constant(Matrix value) { return record(std::move(value), Op::kLeaf, {}); }

Var Tape::parameter(Matrix value) {
  Var v = record(std::move(value), Op::kLeaf, {});
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::record(Matrix value, Op op, std::vector<std::size_t> inputs, double scalar,
                 std::vector<double> extra) {
  bool needs = false;
  for (std::size_t in : inputs) needs = needs || nodes_[in].requires_grad;
  Node node;
  node.value = std::move(value);
  node.op = op;
  node.requires_grad = needs;
  node.inputs = std::move(inputs);
  node.scalar = scalar;
  node.extra = std::move(extra);
  nodes_.push_back(std::move(node));
  has_grads_ = false;
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_slot(std::size_t id) {
  Matrix& g = grads_[id];
  if (g.empty() && !nodes_[id].value.empty()) {
    g = Matrix(nodes_[id].value.rows(), nodes_[id].value.cols());
  }
  return g;
}

void Tape::accumulate(std::size_t id, const Matrix& delta) {
  if (!nodes_[id].requires_grad) return;
  Matrix& g = grad_slot(id);
  auto gd = g.data();
  auto dd = delta.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += dd[i];
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  grads_.assign(nodes_.size(), Matrix());
  if (nodes_[loss.id()].requires_grad) {
    grad_slot(loss.id())(0, 0) = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      if (nodes_[id].requires_grad && !grads_[id].empty()) propagate(id);
    }
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) grad_slot(id);
  has_grads_ = true;
}

const Matrix& Tape::grad(Var v) const {
  if (!has_grads_) throw ContractError("grad: call backward() first");
  return grads_[v.id()];
}

void Tape::propagate(std::size_t id) {
  const Node& node = nodes_[id];
  const Matrix& g = grads_[id];
  const auto& in = node.inputs;
  switch (node.op) {
    case Op::kLeaf:
      break;
    case Op::kMatmul: {
      const Matrix& a = nodes_[in[0]].value;
      const Matrix& b = nodes_[in[1]].value;
      if (nodes_[in[0]].requires_grad) accumulate(in[0], socrec::matmul(g, socrec::transpose(b)));
      if (nodes_[in[1]].requires_grad) accumulate(in[1], socrec::matmul(socrec::transpose(a), g));
      break;
    }
    case Op::kTranspose:
      accumulate(in[0], socrec::transpose(g));
      break;
    case Op::kAdd:
      accumulate(in[0], g);
      accumulate(in[1], g);
      break;
    case Op::kScale:
      accumulate(in[0], socrec::scale(g, node.scalar));
      break;
    case Op::kRowSoftmax: {
      const Matrix& y = node.value;
      Matrix dx(y.rows(), y.cols());
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
        for (std::size_t j = 0; j < y.cols(); ++j) dx(i, j) = y(i, j) * (g(i, j) - dot);
      }
      accumulate(in[0], dx);
      break;
    }
    case Op::kMeanRows: {
      const Matrix& a = nodes_[in[0]].value;
      Matrix dx(a.rows(), a.cols());
      const double inv = 1.0 / static_cast<double>(a.rows());
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) dx(i, j) = g(0, j) * inv;
      accumulate(in[0], dx);
      break;
    }
    case Op::kSum: {
      const Matrix& a = nodes_[in[0]].value;
      accumulate(in[0], Matrix(a.rows(), a.cols(), g(0, 0)));
      break;
    }
    case Op::kSquaredNorm:
      accumulate(in[0], socrec::scale(nodes_[in[0]].value, 2.0 * g(0, 0)));
      break;
    case Op::kTanh: {
      const Matrix& y = node.value;
      Matrix dx(y.rows(), y.cols());
      for (std::size_t i = 0; i < y.size(); ++i) {
        dx.data()[i] = g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
      }
      accumulate(in[0], dx);
      break;
    }
    case Op::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t p : in) {
        const Matrix& part = nodes_[p].value;
        if (nodes_[p].requires_grad) {
          Matrix dx(part.rows(), part.cols());
          for (std::size_t i = 0; i < part.rows(); ++i)
            for (std::size_t j = 0; j < part.cols(); ++j) dx(i, j) = g(i, offset + j);
          accumulate(p, dx);
        }
        offset += part.cols();
      }
      break;
    }
    case Op::kAddRowBroadcast: {
      accumulate(in[0], g);
      if (nodes_[in[1]].requires_grad) {
        Matrix dr(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) dr(0, j) += g(i, j);
        accumulate(in[1], dr);
      }
      break;
    }
    case Op::kRepeatRows: {
      Matrix dr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) dr(0, j) += g(i, j);
      accumulate(in[0], dr);
      break;
    }
    case Op::kStackRows: {
      std::size_t offset = 0;
      for (std::size_t p : in) {
        const Matrix& part = nodes_[p].value;
        if (nodes_[p].requires_grad) {
          Matrix dx(part.rows(), part.cols());
          std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>(offset), dx.size(),
                      dx.data().begin());
          accumulate(p, dx);
        }
        offset += part.size();
      }
      break;
    }
    case Op::kBceWithLogits: {
      const Matrix& z = nodes_[in[0]].value;
      const double inv = g(0, 0) / static_cast<double>(z.rows());
      Matrix dz(z.rows(), 1);
      for (std::size_t i = 0; i < z.rows(); ++i) dz(i, 0) = (logistic(z(i, 0)) - node.extra[i]) * inv;
      accumulate(in[0], dz);
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(matmul(a.value(), b.value()), Op::kMatmul, {a.id(), b.id()});
}

Var transpose(Var a) {
  return a.tape().record(transpose(a.value()), Op::kTranspose, {a.id()});
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(add(a.value(), b.value()), Op::kAdd, {a.id(), b.id()});
}

Var scale(Var a, double s) {
  return a.tape().record(scale(a.value(), s), Op::kScale, {a.id()}, s);
}

Var row_softmax(Var a) {
  return a.tape().record(row_softmax(a.value()), Op::kRowSoftmax, {a.id()});
}

Var mean_rows(Var a) {
  return a.tape().record(mean_rows(a.value()), Op::kMeanRows, {a.id()});
}

Var sum(Var a) {
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  return a.tape().record(Matrix(1, 1, total), Op::kSum, {a.id()});
}

Var squared_norm(Var a) {
  double total = 0.0;
  for (double x : a.value().data()) total += x * x;
  return a.tape().record(Matrix(1, 1, total), Op::kSquaredNorm, {a.id()});
}

Var tanh(Var a) {
  Matrix out = a.value();
  for (double& x : out.data()) x = std::tanh(x);
  return a.tape().record(std::move(out), Op::kTanh, {a.id()});
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    same_tape(parts.front(), p);
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: " + parts.front().value().shape_string() + " beside " +
                       p.value().shape_string());
    }
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    offset += v.cols();
  }
  return t.record(std::move(out), Op::kConcatCols, std::move(ids));
}

Var add_row_broadcast(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row_broadcast: " + av.shape_string() + " plus row " + rv.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  return t.record(std::move(out), Op::kAddRowBroadcast, {a.id(), row.id()});
}

Var repeat_rows(Var row, std::size_t count) {
  const Matrix& rv = row.value();
  if (rv.rows() != 1) throw ShapeError("repeat_rows: expected a row, got " + rv.shape_string());
  Matrix out(count, rv.cols());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < rv.cols(); ++j) out(i, j) = rv(0, j);
  return row.tape().record(std::move(out), Op::kRepeatRows, {row.id()});
}

Var vstack(Var top, Var bottom) {
  const Var parts[] = {top, bottom};
  return stack_rows(parts);
}

Var stack_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (Var p : parts) {
    same_tape(parts.front(), p);
    if (p.cols() != cols) {
      throw ShapeError("stack_rows: " + parts.front().value().shape_string() + " over " +
                       p.value().shape_string());
    }
    rows += p.rows();
    ids.push_back(p.id());
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (Var p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  return t.record(Matrix(rows, cols, std::move(data)), Op::kStackRows, std::move(ids));
}

Var bce_with_logits(Var logits, std::span<const double> labels) {
  const Matrix& z = logits.value();
  if (z.cols() != 1 || z.rows() != labels.size() || z.rows() == 0) {
    throw ShapeError("bce_with_logits: logits " + z.shape_string() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (!std::isfinite(z(i, 0))) throw NumericError("bce_with_logits: non-finite logit");
    total += stable_bce(z(i, 0), labels[i]);
  }
  return logits.tape().record(Matrix(1, 1, total / static_cast<double>(z.rows())),
                              Op::kBceWithLogits, {logits.id()}, 0.0,
                              std::vector<double>(labels.begin(), labels.end()));
}

}  // namespace socrec
