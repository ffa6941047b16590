#include "courtformer/masking.hpp"

#include "courtformer/errors.hpp"

namespace courtformer {

namespace {

void require_dims(std::size_t steps, std::size_t entities) {
  if (steps == 0 || entities == 0) {
    throw UsageError("entity mask needs T >= 1 and K >= 1, got T=" + std::to_string(steps) +
                     " K=" + std::to_string(entities));
  }
}

}  // namespace

std::size_t index_of(std::size_t t, std::size_t k, std::size_t entities) {
  if (k >= entities) {
    throw IndexError("entity " + std::to_string(k) + " out of range for K=" + std::to_string(entities));
  }
  return t * entities + k;
}

std::size_t index_of(std::size_t t, std::size_t k, std::size_t steps, std::size_t entities) {
  if (t >= steps) throw IndexError("step " + std::to_string(t) + " out of range for T=" + std::to_string(steps));
  return index_of(t, k, entities);
}

EntityMask::EntityMask(std::size_t steps, std::size_t entities, nn::AttentionMask matrix)
    : steps_(steps), entities_(entities), matrix_(std::move(matrix)) {
  if (matrix_.side() != steps * entities) {
    throw DimensionError("mask side " + std::to_string(matrix_.side()) + " does not equal T*K = " +
                         std::to_string(steps * entities));
  }
  // Materialize the row index lists so concurrent readers never build them.
  (void)matrix_.allowed_count();
}

bool EntityMask::allowed(std::size_t t1, std::size_t k1, std::size_t t2, std::size_t k2) const {
  return matrix_.allowed(index_of(t1, k1, steps_, entities_), index_of(t2, k2, steps_, entities_));
}

EntityMask build_causal_entity_mask(std::size_t steps, std::size_t entities) {
  require_dims(steps, entities);
  const std::size_t side = steps * entities;
  nn::AttentionMask m(side);
  for (std::size_t row = 0; row < side; ++row) {
    const std::size_t visible = (row / entities + 1) * entities;
    for (std::size_t col = 0; col < visible; ++col) m.set(row, col, true);
  }
  return EntityMask(steps, entities, std::move(m));
}

EntityMask build_custom_mask(const EntityAdjacency& adjacency, std::size_t steps, std::size_t entities) {
  require_dims(steps, entities);
  nn::AttentionMask m(steps * entities);
  for (std::size_t t1 = 0; t1 < steps; ++t1) {
    for (std::size_t k1 = 0; k1 < entities; ++k1) {
      const std::size_t row = t1 * entities + k1;
      for (std::size_t t2 = 0; t2 <= t1; ++t2) {
        for (std::size_t k2 = 0; k2 < entities; ++k2) {
          const bool self = t1 == t2 && k1 == k2;
          if (self || adjacency(t1, k1, t2, k2)) m.set(row, t2 * entities + k2, true);
        }
      }
    }
  }
  return EntityMask(steps, entities, std::move(m));
}

}  // namespace courtformer
