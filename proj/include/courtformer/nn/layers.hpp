#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "courtformer/nn/ops.hpp"

namespace courtformer::nn {

inline constexpr double kLayerNormEpsilon = 1e-5;

// Owns parameters in declaration order. Addresses stay stable for the
// lifetime of the store, including across moves.
template <typename Real>
class ParameterStore {
 public:
  Parameter<Real>& add(std::string name, Tensor<Real> value, bool trainable = true) {
    params_.emplace_back(std::move(name), std::move(value), trainable);
    return params_.back();
  }

  std::vector<Parameter<Real>*> all() {
    std::vector<Parameter<Real>*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }
  std::vector<const Parameter<Real>*> all() const {
    std::vector<const Parameter<Real>*> out;
    for (const auto& p : params_) out.push_back(&p);
    return out;
  }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
      if (p.trainable) n += p.value.size();
    }
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

 private:
  std::deque<Parameter<Real>> params_;
};

using InitRng = std::mt19937_64;

// Weight [in, out] ~ U(-1/sqrt(in), 1/sqrt(in)); bias zero.
template <typename Real>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<Real>& store, const std::string& name, std::size_t in, std::size_t out, InitRng& rng);

  Var<Real> operator()(Var<Real> x) const;

  bool built() const { return weight_ != nullptr; }
  std::size_t in_features() const { return weight_->value.dim(0); }
  std::size_t out_features() const { return weight_->value.dim(1); }
  Parameter<Real>& weight() const { return *weight_; }
  Parameter<Real>& bias() const { return *bias_; }

 private:
  Parameter<Real>* weight_ = nullptr;
  Parameter<Real>* bias_ = nullptr;
};

template <typename Real>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore<Real>& store, const std::string& name, std::size_t dim,
            Real epsilon = static_cast<Real>(kLayerNormEpsilon));

  Var<Real> operator()(Var<Real> x) const;

 private:
  Parameter<Real>* gain_ = nullptr;
  Parameter<Real>* shift_ = nullptr;
  Real epsilon_{};
};

// Linear layers with ReLU after every layer but the last.
template <typename Real>
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore<Real>& store, const std::string& name, std::size_t in,
      const std::vector<std::size_t>& widths, InitRng& rng);

  Var<Real> operator()(Var<Real> x) const;

  std::size_t out_features() const { return layers_.back().out_features(); }
  const std::vector<Linear<Real>>& layers() const { return layers_; }

 private:
  std::vector<Linear<Real>> layers_;
};

template <typename Real>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore<Real>& store, const std::string& name, std::size_t d_model,
                     std::size_t heads, InitRng& rng);

  Var<Real> operator()(Var<Real> x, const AttentionMask& mask,
                       AttentionCapture<Real>* capture = nullptr) const;

  std::size_t heads() const { return heads_; }
  const Linear<Real>& query() const { return query_; }
  const Linear<Real>& key() const { return key_; }
  const Linear<Real>& value() const { return value_; }
  const Linear<Real>& output() const { return output_; }

 private:
  Linear<Real> query_, key_, value_, output_;
  std::size_t heads_ = 0;
};

// Post-norm encoder layer: LN(x + attn(x)), then LN(h + ffn(h)).
template <typename Real>
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParameterStore<Real>& store, const std::string& name, std::size_t d_model,
                   std::size_t heads, std::size_t d_ff, InitRng& rng);

  Var<Real> operator()(Var<Real> x, const AttentionMask& mask,
                       AttentionCapture<Real>* capture = nullptr) const;

  const MultiHeadAttention<Real>& attention() const { return attention_; }

 private:
  MultiHeadAttention<Real> attention_;
  LayerNorm<Real> norm1_, norm2_;
  Linear<Real> ff1_, ff2_;
};

// Transformer-like feedforward block: LN(x + W2 relu(W1 x + b1) + b2).
template <typename Real>
class TffBlock {
 public:
  TffBlock() = default;
  TffBlock(ParameterStore<Real>& store, const std::string& name, std::size_t d_model, std::size_t d_hidden,
           InitRng& rng);

  Var<Real> operator()(Var<Real> x) const;

 private:
  Linear<Real> ff1_, ff2_;
  LayerNorm<Real> norm_;
};

}  // namespace courtformer::nn
