#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "courtformer/nn/attention_mask.hpp"
#include "courtformer/nn/tape.hpp"
#include "courtformer/nn/tensor.hpp"

namespace courtformer::nn {

// ---- differentiable operations -------------------------------------------

// x[*, in] · weight[in, out] + bias[out]
template <typename Real>
Var<Real> linear(Var<Real> x, Var<Real> weight, Var<Real> bias);

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> scale(Var<Real> x, Real factor);

// 1 - x
template <typename Real>
Var<Real> one_minus(Var<Real> x);

// Subgradient at 0 is 0.
template <typename Real>
Var<Real> relu(Var<Real> x);

template <typename Real>
Var<Real> sigmoid(Var<Real> x);

template <typename Real>
Var<Real> tanh(Var<Real> x);

template <typename Real>
Var<Real> layer_norm(Var<Real> x, Var<Real> gain, Var<Real> shift, Real epsilon);

// out[i] = x[index[i]]; gradients scatter-add back.
template <typename Real>
Var<Real> gather_rows(Var<Real> x, std::vector<std::uint32_t> index);

template <typename Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> concat_rows(std::span<const Var<Real>> parts);

// out[g] = mean of rows r with group[r] == g. Every group must be non-empty.
template <typename Real>
Var<Real> group_mean(Var<Real> x, std::vector<std::uint32_t> group, std::size_t groups);

template <typename Real>
Var<Real> sum(Var<Real> x);

// Post-softmax weights per head, each [S, S] with exact zeros where masked.
template <typename Real>
struct AttentionCapture {
  std::vector<Tensor<Real>> weights;
};

// Scaled dot-product attention over `heads` column slices of q, k, v [S, d].
// Masked entries are excluded from the softmax rather than penalized.
// `mask` must outlive any backward pass over the returned node.
template <typename Real>
Var<Real> masked_attention(Var<Real> q, Var<Real> k, Var<Real> v, const AttentionMask& mask,
                           std::size_t heads, AttentionCapture<Real>* capture = nullptr);

// Sum over rows of -log softmax(logits[r])[labels[r]].
template <typename Real>
Var<Real> softmax_cross_entropy(Var<Real> logits, std::span<const std::int32_t> labels);

// ---- plain tensor functions ----------------------------------------------

// Row-wise softmax restricted to allowed entries (allow[i] != 0); denied
// entries get exactly 0. Throws InvalidMaskError for a fully denied row.
template <typename Real>
Tensor<Real> masked_softmax(const Tensor<Real>& logits, std::span<const std::uint8_t> allow);

template <typename Real>
Tensor<Real> softmax_rows(const Tensor<Real>& logits);

// -ln(p[label]) for one probability row.
double cross_entropy_nll(std::span<const double> probabilities, std::int64_t label);
double cross_entropy_nll(std::span<const float> probabilities, std::int64_t label);

// -log_softmax(logits)[label] computed in double precision.
template <typename Real>
double log_softmax_nll(std::span<const Real> logits, std::int64_t label);

}  // namespace courtformer::nn
