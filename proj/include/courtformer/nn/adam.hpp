#pragma once

#include <cstdint>
#include <vector>

#include "courtformer/nn/tensor.hpp"

namespace courtformer::nn {

struct AdamOptions {
  double learning_rate = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-9;
};

template <typename Real>
struct AdamState {
  Tensor<Real> first_moment;
  Tensor<Real> second_moment;
  std::uint64_t step = 0;
  AdamOptions options;

  AdamState() = default;
  AdamState(const Shape& shape, AdamOptions opts)
      : first_moment(shape), second_moment(shape), options(opts) {}
};

// One bias-corrected Adam update of `value` using `grad`.
template <typename Real>
void adam_step(Tensor<Real>& value, const Tensor<Real>& grad, AdamState<Real>& state);

// Adam over a fixed parameter list. Non-trainable parameters are skipped.
template <typename Real>
class Adam {
 public:
  Adam(std::vector<Parameter<Real>*> params, AdamOptions options);

  void step();
  void zero_grad();

  double learning_rate() const { return options_.learning_rate; }
  void set_learning_rate(double lr);

  const AdamState<Real>& state(std::size_t i) const { return states_.at(i); }
  std::uint64_t steps_taken() const { return steps_; }

 private:
  std::vector<Parameter<Real>*> params_;
  std::vector<AdamState<Real>> states_;
  AdamOptions options_;
  std::uint64_t steps_ = 0;
};

}  // namespace courtformer::nn
