#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace chunkwise {

// Dense row-major float32 matrix. Zero-row matrices are allowed (empty caches).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);
  Matrix(std::initializer_list<std::initializer_list<float>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  // Rows [begin, end).
  Matrix slice_rows(std::size_t begin, std::size_t end) const;
  void append_rows(const Matrix& other);
  void truncate_rows(std::size_t rows);

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, float factor);

// Numerically stable softmax of each row (max subtraction, float64 denominators).
Matrix row_softmax(const Matrix& m);

// Per-row layer normalization without affine parameters.
Matrix layer_norm(const Matrix& m, float eps = 1e-5f);

// Exact erf-based GELU, elementwise.
float gelu(float x) noexcept;

// Adds `bias` (1 x cols) to each row in place.
void add_row_bias(Matrix& m, const Matrix& bias);

float max_abs_diff(const Matrix& a, const Matrix& b);
double l2_norm(std::span<const float> v);

// Throws NumericError naming `where` when any entry is NaN or infinite.
void ensure_finite(const Matrix& m, const char* where);

}  // namespace chunkwise
