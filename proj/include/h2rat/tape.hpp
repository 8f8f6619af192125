#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "h2rat/tensor.hpp"

namespace h2rat {

/// A named trainable tensor. The tape reads it by reference and never writes
/// it; gradients live on the tape.
struct Parameter {
  std::string name;
  Tensor value;
};

class Tape;

/// Handle to a node recorded on a specific tape.
class Var {
 public:
  Var() = default;

 private:
  friend class Tape;
  Var(const Tape* owner, std::uint32_t index) : owner_(owner), index_(index) {}

  const Tape* owner_ = nullptr;
  std::uint32_t index_ = 0;
};

enum class OpKind : std::uint8_t {
  kConstant,
  kParameter,
  kMatmul,
  kAdd,
  kBroadcastAddColumns,
  kTanh,
  kSigmoid,
  kHadamard,
  kSoftmax,
  kTranspose,
  kColumn,
  kSum,
  kScale,
  kNegLogPick,
};

/// Reverse-mode gradient tape.
///
/// Nodes are appended in evaluation order, which is already a topological
/// order, so backward() is a single reverse sweep. A tape is single-use: after
/// backward() it only answers value and gradient queries. Parameters bound
/// more than once share one node, so their gradients accumulate.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Registers p as trainable. p must outlive the tape.
  Var param(const Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var broadcast_add_columns(Var m, Var v);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var hadamard(Var a, Var b);
  Var softmax(Var x);
  Var transpose(Var x);
  Var column(Var x, std::size_t index);
  Var sum(Var x);
  Var scale(Var x, double factor);
  // -log(max(p[index], floor)) for a column vector p.
  Var neg_log_pick(Var p, std::size_t index, double floor);

  const Tensor& value(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape backward. The loss must be
  // 1 x 1 and recorded on this tape.
  void backward(Var loss);

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

  // Gradient of the loss w.r.t. a node; valid after backward().
  const Tensor& grad(Var v) const;
  // Gradient for a registered parameter (same shape as the parameter).
  const Tensor& grad(const Parameter& p) const;

  // Registered parameters in first-bind order.
  const std::vector<const Parameter*>& parameters() const { return params_; }

  // Record of node indices visited by the last backward sweep.
  const std::vector<std::uint32_t>& backward_order() const { return visited_; }

 private:
  struct Node {
    OpKind kind;
    std::uint32_t lhs = 0;
    std::uint32_t rhs = 0;
    std::size_t index = 0;
    double scalar = 0.0;
    const Parameter* param = nullptr;
    Tensor value{};
    Tensor grad{};
  };

  std::uint32_t check(Var v) const;
  const Tensor& node_value(const Node& n) const;
  Var push(Node node);
  void require_open() const;
  void backprop(const Node& node);
  Tensor& grad_buffer(std::uint32_t index);

  std::vector<Node> nodes_;
  std::vector<const Parameter*> params_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  std::vector<std::uint32_t> visited_;
  bool consumed_ = false;
};

}  // namespace h2rat
