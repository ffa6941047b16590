#include "courtformer/nn/attention_mask.hpp"

#include "courtformer/errors.hpp"

namespace courtformer::nn {

AttentionMask::AttentionMask(std::size_t side) : side_(side), words_((side * side + 63) / 64, 0) {}

AttentionMask AttentionMask::all_allowed(std::size_t side) {
  AttentionMask mask(side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) mask.set(r, c, true);
  }
  return mask;
}

void AttentionMask::set(std::size_t row, std::size_t col, bool value) {
  if (row >= side_ || col >= side_) {
    throw IndexError("mask entry (" + std::to_string(row) + ", " + std::to_string(col) +
                     ") outside side " + std::to_string(side_));
  }
  const std::size_t bit = row * side_ + col;
  const std::uint64_t flag = std::uint64_t{1} << (bit & 63);
  if (value) {
    words_[bit >> 6] |= flag;
  } else {
    words_[bit >> 6] &= ~flag;
  }
  rows_valid_ = false;
}

void AttentionMask::rebuild_rows() const {
  columns_.clear();
  offsets_.assign(side_ + 1, 0);
  for (std::size_t r = 0; r < side_; ++r) {
    for (std::size_t c = 0; c < side_; ++c) {
      if (allowed(r, c)) columns_.push_back(static_cast<std::uint32_t>(c));
    }
    offsets_[r + 1] = columns_.size();
  }
  rows_valid_ = true;
}

std::span<const std::uint32_t> AttentionMask::row_columns(std::size_t row) const {
  if (!rows_valid_) rebuild_rows();
  return {columns_.data() + offsets_[row], offsets_[row + 1] - offsets_[row]};
}

std::size_t AttentionMask::allowed_count() const {
  if (!rows_valid_) rebuild_rows();
  return columns_.size();
}

std::string AttentionMask::to_text() const {
  std::string out;
  out.reserve(side_ * (side_ + 1));
  for (std::size_t r = 0; r < side_; ++r) {
    for (std::size_t c = 0; c < side_; ++c) out.push_back(allowed(r, c) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

}  // namespace courtformer::nn
