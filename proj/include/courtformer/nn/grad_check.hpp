#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "courtformer/nn/tape.hpp"

namespace courtformer::nn {

struct GradCheckOptions {
  std::size_t coordinates = 200;
  double step = 1e-6;
  // Gradients smaller than this are compared in absolute terms.
  double magnitude_floor = 1e-6;
  std::uint64_t seed = 0;
  // When positive, coordinates are also differenced with this step and the
  // closer of the two estimates is kept. A large step can straddle a ReLU
  // kink and a small one loses digits to roundoff; both rarely fail at once.
  double second_step = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::string worst_coordinate;
};

// Builds the scalar loss on a fresh tape each call.
template <typename Real>
using LossBuilder = std::function<Var<Real>(Tape<Real>&)>;

// Compares reverse-mode gradients with central differences on a random
// subset of trainable coordinates. The loss must be deterministic.
template <typename Real>
GradCheckReport grad_check(const LossBuilder<Real>& loss, const std::vector<Parameter<Real>*>& params,
                           const GradCheckOptions& options = {});

}  // namespace courtformer::nn
