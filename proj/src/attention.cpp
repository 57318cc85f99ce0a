#include "chunkwise/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chunkwise/errors.hpp"
#include "chunkwise/op_counter.hpp"

namespace chunkwise {

AttentionMask::AttentionMask(std::size_t rows, std::size_t cols, bool attendable)
    : rows_(rows), cols_(cols), bits_(rows * cols, attendable ? 1 : 0) {}

AttentionMask AttentionMask::causal(std::size_t n) {
  return from_predicate(n, n, [](std::size_t i, std::size_t j) { return j <= i; });
}

std::size_t AttentionMask::attendable_in_row(std::size_t i) const noexcept {
  std::size_t n = 0;
  for (std::size_t j = 0; j < cols_; ++j) n += bits_[i * cols_ + j];
  return n;
}

namespace {

void check_shapes(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionMask& mask) {
  if (q.cols() != k.cols()) throw ShapeError("attention: q/k width mismatch");
  if (k.rows() != v.rows()) throw ShapeError("attention: k/v row mismatch");
  if (mask.rows() != q.rows() || mask.cols() != k.rows()) {
    throw ShapeError("attention: mask is " + std::to_string(mask.rows()) + "x" +
                     std::to_string(mask.cols()) + ", expected " + std::to_string(q.rows()) +
                     "x" + std::to_string(k.rows()));
  }
}

// Scores for attendable keys of row i; returns the max score.
float row_scores(const Matrix& q, const Matrix& k, const AttentionMask& mask, std::size_t i,
                 float inv_sqrt_d, std::vector<std::size_t>& keys, std::vector<float>& scores) {
  keys.clear();
  scores.clear();
  const float* qi = q.row(i).data();
  const std::size_t d = q.cols();
  float mx = -INFINITY;
  for (std::size_t j = 0; j < k.rows(); ++j) {
    if (!mask.attendable(i, j)) continue;
    const float* kj = k.row(j).data();
    float dot = 0.0f;
    for (std::size_t c = 0; c < d; ++c) dot += qi[c] * kj[c];
    const float s = dot * inv_sqrt_d;
    keys.push_back(j);
    scores.push_back(s);
    mx = std::max(mx, s);
  }
  if (keys.empty()) {
    throw ContractViolation("attention: row " + std::to_string(i) + " is fully masked");
  }
  count_macs(OpStage::kDotProduct, keys.size() * d);
  return mx;
}

}  // namespace

Matrix masked_attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionMask& mask) {
  check_shapes(q, k, v, mask);
  const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(q.cols()));
  const std::size_t dv = v.cols();
  Matrix out(q.rows(), dv);
  std::vector<std::size_t> keys;
  std::vector<float> scores;
  std::vector<float> acc(dv);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const float mx = row_scores(q, k, mask, i, inv_sqrt_d, keys, scores);
    double denom = 0.0;
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::size_t t = 0; t < keys.size(); ++t) {
      const float w = std::exp(scores[t] - mx);
      denom += w;
      const float* vj = v.row(keys[t]).data();
      for (std::size_t c = 0; c < dv; ++c) acc[c] += w * vj[c];
    }
    count_macs(OpStage::kValue, keys.size() * dv);
    const float inv = static_cast<float>(1.0 / denom);
    auto dst = out.row(i);
    for (std::size_t c = 0; c < dv; ++c) dst[c] = acc[c] * inv;
  }
  ensure_finite(out, "masked_attention");
  return out;
}

Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  return masked_attention(q, k, v, AttentionMask::all(q.rows(), k.rows()));
}

Matrix attention_weights(const Matrix& q, const Matrix& k, const AttentionMask& mask) {
  if (q.cols() != k.cols()) throw ShapeError("attention_weights: q/k width mismatch");
  if (mask.rows() != q.rows() || mask.cols() != k.rows()) throw ShapeError("attention_weights: mask shape");
  const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(q.cols()));
  Matrix out(q.rows(), k.rows());
  std::vector<std::size_t> keys;
  std::vector<float> scores;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const float mx = row_scores(q, k, mask, i, inv_sqrt_d, keys, scores);
    double denom = 0.0;
    for (float& s : scores) {
      s = std::exp(s - mx);
      denom += s;
    }
    for (std::size_t t = 0; t < keys.size(); ++t) out(i, keys[t]) = static_cast<float>(scores[t] / denom);
  }
  return out;
}

}  // namespace chunkwise
