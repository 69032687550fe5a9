#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "geomae/tensor.hpp"

namespace geomae {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Append-only record of a computation for reverse-mode differentiation.
//
// Nodes are stored in creation order, so every node's inputs precede it and
// backward() is a single reverse sweep. A tape is meant to be built once per
// loss evaluation and discarded; parameters bound with parameter() receive
// their gradients when backward() runs.
class Tape {
 public:
  // Propagates the gradient of node `self` into its inputs.
  using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that requires a gradient; read it back with grad().
  Var leaf(Tensor value);
  // Leaf whose gradient is accumulated into `param` by backward(). `param`
  // must outlive the backward call.
  Var parameter(Tensor& param);

  // Records the result of an op. The value must be finite; a NaN/Inf result
  // raises NumericError naming `op`.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return value(v.id()); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Upstream gradient of a node during backward (or after it, for leaves).
  std::span<const double> grad(Var v) const;
  std::span<const double> grad(std::size_t id) const;
  // Gradient accumulator of an input node, zero-initialized on first use.
  // Returns an empty span for nodes that do not require a gradient.
  std::span<double> grad_accumulator(std::size_t id);

  // Reverse sweep from a scalar loss. A second call without reset_grads() throws.
  void backward(Var loss);
  void reset_grads();

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    Tensor* bound = nullptr;
    BackwardFn backward;
    std::vector<double> grad;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace geomae
