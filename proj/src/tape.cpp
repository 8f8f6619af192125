#include "h2rat/tape.hpp"

#include <algorithm>
#include <cmath>

#include "h2rat/errors.hpp"
#include "h2rat/kernels.hpp"

namespace h2rat {

std::uint32_t Tape::check(Var v) const {
  if (v.owner_ != this || v.index_ >= nodes_.size()) {
    throw TapeError("variable is not recorded on this tape");
  }
  return v.index_;
}

void Tape::require_open() const {
  if (consumed_) throw TapeError("tape already consumed by backward()");
}

const Tensor& Tape::node_value(const Node& n) const {
  return n.kind == OpKind::kParameter ? n.param->value : n.value;
}

const Tensor& Tape::value(Var v) const { return node_value(nodes_[check(v)]); }

Var Tape::push(Node node) {
  require_open();
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  return push(Node{.kind = OpKind::kConstant, .value = std::move(value)});
}

Var Tape::param(const Parameter& p) {
  require_open();
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  require_finite(p.value, "parameter");
  Var v = push(Node{.kind = OpKind::kParameter, .param = &p});
  param_nodes_.emplace(&p, v.index_);
  params_.push_back(&p);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const auto ia = check(a), ib = check(b);
  Tensor out = h2rat::matmul(value(a), value(b));
  return push(Node{.kind = OpKind::kMatmul, .lhs = ia, .rhs = ib, .value = std::move(out)});
}

Var Tape::add(Var a, Var b) {
  const auto ia = check(a), ib = check(b);
  Tensor out = h2rat::add(value(a), value(b));
  return push(Node{.kind = OpKind::kAdd, .lhs = ia, .rhs = ib, .value = std::move(out)});
}

Var Tape::broadcast_add_columns(Var m, Var v) {
  const auto im = check(m), iv = check(v);
  Tensor out = h2rat::broadcast_add_columns(value(m), value(v));
  return push(
      Node{.kind = OpKind::kBroadcastAddColumns, .lhs = im, .rhs = iv, .value = std::move(out)});
}

Var Tape::tanh(Var x) {
  const auto ix = check(x);
  return push(Node{.kind = OpKind::kTanh, .lhs = ix, .value = tanh_elem(value(x))});
}

Var Tape::sigmoid(Var x) {
  const auto ix = check(x);
  return push(Node{.kind = OpKind::kSigmoid, .lhs = ix, .value = sigmoid_elem(value(x))});
}

Var Tape::hadamard(Var a, Var b) {
  const auto ia = check(a), ib = check(b);
  Tensor out = h2rat::hadamard(value(a), value(b));
  return push(Node{.kind = OpKind::kHadamard, .lhs = ia, .rhs = ib, .value = std::move(out)});
}

Var Tape::softmax(Var x) {
  const auto ix = check(x);
  return push(Node{.kind = OpKind::kSoftmax, .lhs = ix, .value = softmax_vec(value(x))});
}

Var Tape::transpose(Var x) {
  const auto ix = check(x);
  return push(Node{.kind = OpKind::kTranspose, .lhs = ix, .value = h2rat::transpose(value(x))});
}

Var Tape::column(Var x, std::size_t index) {
  const auto ix = check(x);
  return push(
      Node{.kind = OpKind::kColumn, .lhs = ix, .index = index, .value = value(x).col(index)});
}

Var Tape::sum(Var x) {
  const auto ix = check(x);
  Tensor out(1, 1, h2rat::sum(value(x)));
  require_finite(out, "sum");
  return push(Node{.kind = OpKind::kSum, .lhs = ix, .value = std::move(out)});
}

Var Tape::scale(Var x, double factor) {
  const auto ix = check(x);
  return push(Node{
      .kind = OpKind::kScale, .lhs = ix, .scalar = factor, .value = h2rat::scale(value(x), factor)});
}

Var Tape::neg_log_pick(Var p, std::size_t index, double floor) {
  const auto ip = check(p);
  const Tensor& pv = value(p);
  if (pv.cols() != 1 || index >= pv.rows()) {
    throw DimensionError("neg_log_pick: index " + std::to_string(index) + " outside " +
                         pv.shape().str());
  }
  Tensor out(1, 1, -std::log(std::max(pv[index], floor)));
  require_finite(out, "neg_log_pick");
  return push(Node{
      .kind = OpKind::kNegLogPick, .lhs = ip, .index = index, .scalar = floor, .value = std::move(out)});
}

Tensor& Tape::grad_buffer(std::uint32_t index) {
  Node& n = nodes_[index];
  if (n.grad.empty() && node_value(n).size() != 0) {
    const Shape s = node_value(n).shape();
    n.grad = Tensor(s.rows, s.cols);
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  const auto il = check(loss);
  require_open();
  if (node_value(nodes_[il]).shape() != Shape{1, 1}) {
    throw InvalidArgument("backward: loss must be 1x1, got " + node_value(nodes_[il]).shape().str());
  }
  consumed_ = true;
  visited_.clear();
  grad_buffer(il)[0] = 1.0;
  for (std::uint32_t i = il + 1; i-- > 0;) {
    visited_.push_back(i);
    if (nodes_[i].grad.empty()) continue;
    backprop(nodes_[i]);
  }
  for (const Parameter* p : params_) {
    Tensor& g = grad_buffer(param_nodes_.at(p));
    require_finite(g, "backward");
  }
}

void Tape::backprop(const Node& node) {
  const Tensor& g = node.grad;
  const auto& k = kernels::active();
  switch (node.kind) {
    case OpKind::kConstant:
    case OpKind::kParameter:
      return;
    case OpKind::kMatmul: {
      const Tensor& a = node_value(nodes_[node.lhs]);
      const Tensor& b = node_value(nodes_[node.rhs]);
      const Tensor da = h2rat::matmul(g, h2rat::transpose(b));
      const Tensor db = h2rat::matmul(h2rat::transpose(a), g);
      k.accumulate(da.data(), grad_buffer(node.lhs).data(), da.size());
      k.accumulate(db.data(), grad_buffer(node.rhs).data(), db.size());
      return;
    }
    case OpKind::kAdd:
      k.accumulate(g.data(), grad_buffer(node.lhs).data(), g.size());
      k.accumulate(g.data(), grad_buffer(node.rhs).data(), g.size());
      return;
    case OpKind::kBroadcastAddColumns: {
      k.accumulate(g.data(), grad_buffer(node.lhs).data(), g.size());
      Tensor& dv = grad_buffer(node.rhs);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < g.cols(); ++c) s += g(r, c);
        dv[r] += s;
      }
      return;
    }
    case OpKind::kTanh: {
      Tensor& dx = grad_buffer(node.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = node.value[i];
        dx[i] += g[i] * (1.0 - y * y);
      }
      return;
    }
    case OpKind::kSigmoid: {
      Tensor& dx = grad_buffer(node.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = node.value[i];
        dx[i] += g[i] * (y * (1.0 - y));
      }
      return;
    }
    case OpKind::kHadamard: {
      const Tensor& a = node_value(nodes_[node.lhs]);
      const Tensor& b = node_value(nodes_[node.rhs]);
      Tensor tmp(g.rows(), g.cols());
      k.mul(g.data(), b.data(), tmp.data(), g.size());
      k.accumulate(tmp.data(), grad_buffer(node.lhs).data(), g.size());
      k.mul(g.data(), a.data(), tmp.data(), g.size());
      k.accumulate(tmp.data(), grad_buffer(node.rhs).data(), g.size());
      return;
    }
    case OpKind::kSoftmax: {
      const Tensor& y = node.value;
      double dot = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
      Tensor& dx = grad_buffer(node.lhs);
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (g[i] - dot);
      return;
    }
    case OpKind::kTranspose: {
      const Tensor gt = h2rat::transpose(g);
      k.accumulate(gt.data(), grad_buffer(node.lhs).data(), gt.size());
      return;
    }
    case OpKind::kColumn: {
      Tensor& dx = grad_buffer(node.lhs);
      for (std::size_t r = 0; r < g.rows(); ++r) dx(r, node.index) += g[r];
      return;
    }
    case OpKind::kSum: {
      Tensor& dx = grad_buffer(node.lhs);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
      return;
    }
    case OpKind::kScale:
      k.axpy(node.scalar, g.data(), grad_buffer(node.lhs).data(), g.size());
      return;
    case OpKind::kNegLogPick: {
      const double p = node_value(nodes_[node.lhs])[node.index];
      // Clamped region is flat.
      if (p > node.scalar) grad_buffer(node.lhs)[node.index] += -g[0] / p;
      return;
    }
  }
}

const Tensor& Tape::grad(Var v) const {
  const auto i = check(v);
  if (!consumed_) throw TapeError("gradients are available only after backward()");
  return nodes_[i].grad;
}

const Tensor& Tape::grad(const Parameter& p) const {
  auto it = param_nodes_.find(&p);
  if (it == param_nodes_.end()) throw TapeError("parameter '" + p.name + "' is not on this tape");
  if (!consumed_) throw TapeError("gradients are available only after backward()");
  return nodes_[it->second].grad;
}

}  // namespace h2rat
