#include "courtformer/nn/layers.hpp"

#include <cmath>

namespace courtformer::nn {

template <typename Real>
Linear<Real>::Linear(ParameterStore<Real>& store, const std::string& name, std::size_t in, std::size_t out,
                     InitRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<Real> w(Shape{in, out});
  for (auto& v : w.data()) v = static_cast<Real>(dist(rng));
  weight_ = &store.add(name + ".weight", std::move(w));
  bias_ = &store.add(name + ".bias", Tensor<Real>(Shape{out}));
}

template <typename Real>
Var<Real> Linear<Real>::operator()(Var<Real> x) const {
  auto* tape = x.tape();
  return linear(x, tape->parameter(*weight_), tape->parameter(*bias_));
}

template <typename Real>
LayerNorm<Real>::LayerNorm(ParameterStore<Real>& store, const std::string& name, std::size_t dim, Real epsilon)
    : epsilon_(epsilon) {
  gain_ = &store.add(name + ".gain", Tensor<Real>(Shape{dim}, Real{1}));
  shift_ = &store.add(name + ".shift", Tensor<Real>(Shape{dim}));
}

template <typename Real>
Var<Real> LayerNorm<Real>::operator()(Var<Real> x) const {
  auto* tape = x.tape();
  return layer_norm(x, tape->parameter(*gain_), tape->parameter(*shift_), epsilon_);
}

template <typename Real>
Mlp<Real>::Mlp(ParameterStore<Real>& store, const std::string& name, std::size_t in,
               const std::vector<std::size_t>& widths, InitRng& rng) {
  if (widths.empty()) throw ConfigError("mlp '" + name + "' needs at least one layer");
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), prev, widths[i], rng);
    prev = widths[i];
  }
}

template <typename Real>
Var<Real> Mlp<Real>::operator()(Var<Real> x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i](x);
    if (i + 1 < layers_.size()) x = relu(x);
  }
  return x;
}

template <typename Real>
MultiHeadAttention<Real>::MultiHeadAttention(ParameterStore<Real>& store, const std::string& name,
                                             std::size_t d_model, std::size_t heads, InitRng& rng)
    : heads_(heads) {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  query_ = Linear<Real>(store, name + ".query", d_model, d_model, rng);
  key_ = Linear<Real>(store, name + ".key", d_model, d_model, rng);
  value_ = Linear<Real>(store, name + ".value", d_model, d_model, rng);
  output_ = Linear<Real>(store, name + ".output", d_model, d_model, rng);
}

template <typename Real>
Var<Real> MultiHeadAttention<Real>::operator()(Var<Real> x, const AttentionMask& mask,
                                               AttentionCapture<Real>* capture) const {
  auto attended = masked_attention(query_(x), key_(x), value_(x), mask, heads_, capture);
  return output_(attended);
}

template <typename Real>
TransformerLayer<Real>::TransformerLayer(ParameterStore<Real>& store, const std::string& name,
                                         std::size_t d_model, std::size_t heads, std::size_t d_ff, InitRng& rng)
    : attention_(store, name + ".attention", d_model, heads, rng),
      norm1_(store, name + ".norm1", d_model),
      norm2_(store, name + ".norm2", d_model),
      ff1_(store, name + ".ff1", d_model, d_ff, rng),
      ff2_(store, name + ".ff2", d_ff, d_model, rng) {}

template <typename Real>
Var<Real> TransformerLayer<Real>::operator()(Var<Real> x, const AttentionMask& mask,
                                             AttentionCapture<Real>* capture) const {
  auto h = norm1_(add(x, attention_(x, mask, capture)));
  return norm2_(add(h, ff2_(relu(ff1_(h)))));
}

template <typename Real>
TffBlock<Real>::TffBlock(ParameterStore<Real>& store, const std::string& name, std::size_t d_model,
                         std::size_t d_hidden, InitRng& rng)
    : ff1_(store, name + ".ff1", d_model, d_hidden, rng),
      ff2_(store, name + ".ff2", d_hidden, d_model, rng),
      norm_(store, name + ".norm", d_model) {}

template <typename Real>
Var<Real> TffBlock<Real>::operator()(Var<Real> x) const {
  return norm_(add(x, ff2_(relu(ff1_(x)))));
}

template class Linear<float>;
template class Linear<double>;
template class LayerNorm<float>;
template class LayerNorm<double>;
template class Mlp<float>;
template class Mlp<double>;
template class MultiHeadAttention<float>;
template class MultiHeadAttention<double>;
template class TransformerLayer<float>;
template class TransformerLayer<double>;
template class TffBlock<float>;
template class TffBlock<double>;

}  // namespace courtformer::nn
