#include "courtformer/binning.hpp"

#include <cmath>
#include <string>

#include "courtformer/errors.hpp"

namespace courtformer {

namespace {

void validate(int n, double extent) {
  if (n <= 0 || n % 2 == 0) throw ConfigError("bins per axis must be a positive odd number, got " + std::to_string(n));
  if (!(extent > 0.0) || !std::isfinite(extent)) throw ConfigError("bin extent must be positive and finite");
}

double cell_center(int index, int n, double extent) {
  const double cell = extent / n;
  return -extent / 2.0 + (index + 0.5) * cell;
}

}  // namespace

int axis_cell(double displacement, int bins_per_axis, double extent) {
  if (!std::isfinite(displacement)) throw DataError("non-finite displacement");
  const double cell = extent / bins_per_axis;
  const double raw = std::floor((displacement + extent / 2.0) / cell);
  if (raw < 0.0) return 0;
  if (raw > bins_per_axis - 1) return bins_per_axis - 1;
  return static_cast<int>(raw);
}

BinGrid2D::BinGrid2D(int bins_per_axis, double extent_feet) : n_(bins_per_axis), extent_(extent_feet) {
  validate(n_, extent_);
}

int BinGrid2D::bin(double dx, double dy) const {
  const int col = axis_cell(dx, n_, extent_);
  const int row = axis_cell(dy, n_, extent_);
  return row * n_ + col;
}

std::array<double, 2> BinGrid2D::center(int label) const {
  if (label < 0 || label >= label_count()) {
    throw IndexError("2D bin label " + std::to_string(label) + " outside [0, " + std::to_string(label_count()) + ")");
  }
  return {cell_center(label % n_, n_, extent_), cell_center(label / n_, n_, extent_)};
}

BinGrid3D::BinGrid3D(int bins_per_axis, double extent_feet) : n_(bins_per_axis), extent_(extent_feet) {
  validate(n_, extent_);
}

int BinGrid3D::bin(double dx, double dy, double dz) const {
  const int col = axis_cell(dx, n_, extent_);
  const int row = axis_cell(dy, n_, extent_);
  const int zrow = axis_cell(dz, n_, extent_);
  return (zrow * n_ + row) * n_ + col;
}

std::array<double, 3> BinGrid3D::center(int label) const {
  if (label < 0 || label >= label_count()) {
    throw IndexError("3D bin label " + std::to_string(label) + " outside [0, " + std::to_string(label_count()) + ")");
  }
  return {cell_center(label % n_, n_, extent_), cell_center((label / n_) % n_, n_, extent_),
          cell_center(label / (n_ * n_), n_, extent_)};
}

}  // namespace courtformer
