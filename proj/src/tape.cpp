#include "geomae/tape.hpp"

#include <stdexcept>
#include <string>

#include "geomae/errors.hpp"

namespace geomae {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), false, nullptr, {}, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), true, nullptr, {}, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor& param) {
  nodes_.push_back(Node{param, true, &param, {}, {}});
  nodes_.back().value.clear_grad();
  return {this, nodes_.size() - 1};
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  bool needs_grad = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw std::logic_error("op inputs belong to a different tape");
    needs_grad = needs_grad || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), needs_grad, nullptr,
                        needs_grad ? std::move(backward) : BackwardFn{}, {}});
  return {this, nodes_.size() - 1};
}

std::span<const double> Tape::grad(Var v) const { return grad(v.id()); }

std::span<const double> Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (!n.requires_grad) throw std::logic_error("node does not require a gradient");
  if (n.grad.empty() && n.value.size() > 0) {
    throw std::logic_error("gradient not available; run backward first");
  }
  return n.grad;
}

std::span<double> Tape::grad_accumulator(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return {};
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw std::logic_error("loss belongs to a different tape");
  if (backward_done_) throw std::logic_error("backward called twice without reset_grads()");
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + root.value.shape_string());
  }
  backward_done_ = true;
  if (root.requires_grad) {
    grad_accumulator(loss.id())[0] = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) n.backward(*this, id);
      if (n.bound != nullptr) n.bound->accumulate_grad(n.grad);
    }
  }
  // Leaves the loss does not depend on get an explicit zero gradient.
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.backward || !n.grad.empty()) continue;
    grad_accumulator(id);
    if (n.bound != nullptr) n.bound->accumulate_grad(n.grad);
  }
}

void Tape::reset_grads() {
  for (Node& n : nodes_) n.grad.clear();
  backward_done_ = false;
}

}  // namespace geomae
