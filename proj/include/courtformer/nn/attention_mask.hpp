#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "courtformer/errors.hpp"

namespace courtformer::nn {

// Square boolean attention pattern, one bit per entry. Row i lists the
// columns token i may attend to. Rows are cached as sorted index lists so
// the attention kernel only touches allowed entries.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(std::size_t side);

  static AttentionMask all_allowed(std::size_t side);

  std::size_t side() const noexcept { return side_; }

  bool allowed(std::size_t row, std::size_t col) const noexcept {
    const std::size_t bit = row * side_ + col;
    return (words_[bit >> 6] >> (bit & 63)) & 1U;
  }

  void set(std::size_t row, std::size_t col, bool value);

  // Sorted allowed columns of `row`. Valid until the next set().
  std::span<const std::uint32_t> row_columns(std::size_t row) const;

  std::size_t allowed_count() const;

  // Text grid: one line per row, '1' allowed and '0' denied.
  std::string to_text() const;

  friend bool operator==(const AttentionMask& a, const AttentionMask& b) {
    return a.side_ == b.side_ && a.words_ == b.words_;
  }

 private:
  void rebuild_rows() const;

  std::size_t side_ = 0;
  std::vector<std::uint64_t> words_;
  mutable std::vector<std::uint32_t> columns_;
  mutable std::vector<std::size_t> offsets_;
  mutable bool rows_valid_ = false;
};

}  // namespace courtformer::nn
