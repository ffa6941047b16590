#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "courtformer/nn/attention_mask.hpp"

namespace courtformer {

// Flat token index of entity k at step t: t*K + k.
std::size_t index_of(std::size_t t, std::size_t k, std::size_t entities);
std::size_t index_of(std::size_t t, std::size_t k, std::size_t steps, std::size_t entities);

// The T x K x T x K multi-entity mask in its TK x TK matrix form.
// Immutable once built.
class EntityMask {
 public:
  EntityMask(std::size_t steps, std::size_t entities, nn::AttentionMask matrix);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t entities() const noexcept { return entities_; }
  std::size_t side() const noexcept { return matrix_.side(); }

  // Tensor-form lookup M[t1, k1, t2, k2].
  bool allowed(std::size_t t1, std::size_t k1, std::size_t t2, std::size_t k2) const;

  const nn::AttentionMask& matrix() const noexcept { return matrix_; }

  // 0/1 grid, one matrix row per line.
  std::string to_text() const { return matrix_.to_text(); }

 private:
  std::size_t steps_;
  std::size_t entities_;
  nn::AttentionMask matrix_;
};

// Everything at the same or an earlier step is visible.
EntityMask build_causal_entity_mask(std::size_t steps, std::size_t entities);

// Predicate over (t1, k1, t2, k2), consulted only for t2 <= t1.
using EntityAdjacency = std::function<bool(std::size_t t1, std::size_t k1, std::size_t t2, std::size_t k2)>;

// Causal skeleton intersected with `adjacency`. Future entries stay denied
// whatever the predicate says. Self-visibility is always kept so no row is
// empty.
EntityMask build_custom_mask(const EntityAdjacency& adjacency, std::size_t steps, std::size_t entities);

}  // namespace courtformer
