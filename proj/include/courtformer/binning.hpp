#pragma once

#include <array>
#include <cstdint>

#include "courtformer/errors.hpp"

namespace courtformer {

// Square n x n discretization of displacement space, centered on zero.
// Labels are zero-based: label = row * n + col, col from dx, row from dy.
// Displacements outside the grid clamp to the edge cells; a value exactly
// on an interior cell edge belongs to the higher-index cell.
class BinGrid2D {
 public:
  BinGrid2D(int bins_per_axis, double extent_feet);

  static BinGrid2D players() { return BinGrid2D(11, 11.0); }

  int bins_per_axis() const noexcept { return n_; }
  double extent() const noexcept { return extent_; }
  double cell() const noexcept { return extent_ / n_; }
  int label_count() const noexcept { return n_ * n_; }
  int center_label() const noexcept { return (n_ / 2) * n_ + n_ / 2; }

  int bin(double dx, double dy) const;
  std::array<double, 2> center(int label) const;

 private:
  int n_;
  double extent_;
};

// Cubic n x n x n grid: label = (zrow * n + row) * n + col.
class BinGrid3D {
 public:
  BinGrid3D(int bins_per_axis, double extent_feet);

  static BinGrid3D ball() { return BinGrid3D(19, 19.0); }

  int bins_per_axis() const noexcept { return n_; }
  double extent() const noexcept { return extent_; }
  double cell() const noexcept { return extent_ / n_; }
  int label_count() const noexcept { return n_ * n_ * n_; }
  int center_label() const noexcept { return ((n_ / 2) * n_ + n_ / 2) * n_ + n_ / 2; }

  int bin(double dx, double dy, double dz) const;
  std::array<double, 3> center(int label) const;

 private:
  int n_;
  double extent_;
};

// Cell index along one axis: clamp(floor((d + extent/2) / cell), 0, n-1).
int axis_cell(double displacement, int bins_per_axis, double extent);

}  // namespace courtformer
