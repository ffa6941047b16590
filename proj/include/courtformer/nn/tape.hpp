#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "courtformer/nn/tensor.hpp"

namespace courtformer::nn {

template <typename Real>
class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
template <typename Real>
class Var {
 public:
  Var() = default;
  Var(Tape<Real>* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape<Real>* tape() const noexcept { return tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor<Real>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<Real>* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Records a forward computation and replays it backwards. A tape built with
// record_gradients = false keeps values only, for inference.
template <typename Real>
class Tape {
 public:
  // Receives the gradient flowing into the node; adds into parent gradients.
  using Backward = std::function<void(Tape&, const Tensor<Real>& grad_out)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var<Real> constant(Tensor<Real> value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, {}, false});
    return {this, last_id()};
  }

  // One leaf per parameter per tape; repeated uses share the node.
  Var<Real> parameter(Parameter<Real>& p) {
    if (auto it = leaf_of_.find(&p); it != leaf_of_.end()) return {this, it->second};
    nodes_.push_back(Node{p.value, {}, &p, {}, recording_ && p.trainable});
    leaf_of_.emplace(&p, last_id());
    return {this, last_id()};
  }

  Var<Real> record(Tensor<Real> value, std::initializer_list<Var<Real>> parents, Backward fn) {
    return record(std::move(value), std::span<const Var<Real>>(parents.begin(), parents.size()),
                  std::move(fn));
  }

  Var<Real> record(Tensor<Real> value, std::span<const Var<Real>> parents, Backward fn) {
    bool needs = false;
    if (recording_) {
      for (const auto& p : parents) needs = needs || nodes_[p.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, nullptr, needs ? std::move(fn) : Backward{}, needs});
    return {this, last_id()};
  }

  const Tensor<Real>& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var<Real> v) const { return nodes_[v.id()].requires_grad; }

  // Gradient buffer of a node, zero-initialized on first access.
  Tensor<Real>& grad(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor<Real>(n.value.shape());
    return n.grad;
  }
  Tensor<Real>& grad(Var<Real> v) { return grad(v.id()); }

  const Tensor<Real>* grad_if_present(Var<Real> v) const {
    const Node& n = nodes_[v.id()];
    return n.grad.empty() ? nullptr : &n.grad;
  }

  // Seeds d(output)/d(output) = 1 and accumulates into Parameter::grad.
  void backward(Var<Real> output) {
    if (output.tape() != this) throw UsageError("backward called with a variable from another tape");
    if (output.value().size() != 1) {
      throw DimensionError("backward needs a scalar output, got shape " + shape_string(output.shape()));
    }
    if (!nodes_[output.id()].requires_grad) return;
    grad(output.id())[0] += Real{1};
    for (std::size_t i = output.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) {
        n.backward(*this, n.grad);
      } else if (n.param != nullptr) {
        auto dst = n.param->grad.data();
        auto src = n.grad.data();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
      }
    }
  }

 private:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    Parameter<Real>* param;
    Backward backward;
    bool requires_grad;
  };

  std::uint32_t last_id() const { return static_cast<std::uint32_t>(nodes_.size() - 1); }

  bool recording_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<Real>*, std::uint32_t> leaf_of_;
};

}  // namespace courtformer::nn
