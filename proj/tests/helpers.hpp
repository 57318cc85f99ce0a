#pragma once

#include <cstdint>
#include <random>

#include "chunkwise/matrix.hpp"

namespace testutil {

inline chunkwise::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, float scale = 1.0f) {
  std::uniform_real_distribution<float> dist(-scale, scale);
  chunkwise::Matrix m(rows, cols);
  for (float& x : m.data()) x = dist(rng);
  return m;
}

inline chunkwise::Matrix naive_matmul(const chunkwise::Matrix& a, const chunkwise::Matrix& b) {
  chunkwise::Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<float>(s);
    }
  return out;
}

}  // namespace testutil
