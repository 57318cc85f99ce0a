#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chunkwise/matrix.hpp"

namespace chunkwise {

// Boolean attendability over (query row, key column), 0-based storage.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t rows, std::size_t cols, bool attendable = true);

  static AttentionMask all(std::size_t rows, std::size_t cols) { return {rows, cols, true}; }
  // Lower triangular: row i sees columns 0..i.
  static AttentionMask causal(std::size_t n);

  template <class Predicate>
  static AttentionMask from_predicate(std::size_t rows, std::size_t cols, Predicate&& pred) {
    AttentionMask m(rows, cols, false);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m.set(i, j, pred(i, j));
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool attendable(std::size_t i, std::size_t j) const noexcept { return bits_[i * cols_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool value) noexcept { bits_[i * cols_ + j] = value ? 1 : 0; }

  std::size_t attendable_in_row(std::size_t i) const noexcept;

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Scaled dot-product attention where row i mixes only rows j of `v` with mask(i, j) set.
// Masked terms are excluded from the reduction entirely, so their keys/values never
// influence the result. Throws ContractViolation on a fully masked row.
Matrix masked_attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionMask& mask);

// Unmasked softmax(q k^T / sqrt(d)) v.
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v);

// Attention weights (rows of the softmax matrix) for the same masked computation.
Matrix attention_weights(const Matrix& q, const Matrix& k, const AttentionMask& mask);

}  // namespace chunkwise
