#include "courtformer/nn/adam.hpp"

#include <cmath>

namespace courtformer::nn {

template <typename Real>
void adam_step(Tensor<Real>& value, const Tensor<Real>& grad, AdamState<Real>& state) {
  if (value.shape() != grad.shape() || value.shape() != state.first_moment.shape()) {
    throw DimensionError("adam_step: value " + shape_string(value.shape()) + ", gradient " +
                         shape_string(grad.shape()) + ", moments " + shape_string(state.first_moment.shape()));
  }
  const auto& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  const Real b1 = static_cast<Real>(o.beta1);
  const Real b2 = static_cast<Real>(o.beta2);
  auto m = state.first_moment.data();
  auto v = state.second_moment.data();
  auto theta = value.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (Real{1} - b1) * g[i];
    v[i] = b2 * v[i] + (Real{1} - b2) * g[i] * g[i];
    if (m[i] == Real{0}) continue;
    const double m_hat = static_cast<double>(m[i]) / correction1;
    const double v_hat = static_cast<double>(v[i]) / correction2;
    theta[i] -= static_cast<Real>(o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon));
  }
}

template <typename Real>
Adam<Real>::Adam(std::vector<Parameter<Real>*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  states_.reserve(params_.size());
  for (auto* p : params_) states_.emplace_back(p->value.shape(), options_);
}

template <typename Real>
void Adam<Real>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->trainable) continue;
    adam_step(params_[i]->value, params_[i]->grad, states_[i]);
  }
  ++steps_;
}

template <typename Real>
void Adam<Real>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

template <typename Real>
void Adam<Real>::set_learning_rate(double lr) {
  options_.learning_rate = lr;
  for (auto& s : states_) s.options.learning_rate = lr;
}

template void adam_step(Tensor<float>&, const Tensor<float>&, AdamState<float>&);
template void adam_step(Tensor<double>&, const Tensor<double>&, AdamState<double>&);
template class Adam<float>;
template class Adam<double>;

}  // namespace courtformer::nn
