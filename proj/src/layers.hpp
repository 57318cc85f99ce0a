#pragma once

// Building blocks shared by the encoder and decoder passes.

#include "chunkwise/matrix.hpp"
#include "chunkwise/model.hpp"
#include "chunkwise/op_counter.hpp"

namespace chunkwise::detail {

inline Matrix project(const Matrix& a, const Matrix& w) {
  count_macs(OpStage::kProjection, a.rows() * w.rows() * w.cols());
  return matmul(a, w);
}

// h + GELU(LN(h) W + b)
inline Matrix feed_forward(const FeedForward& ff, const Matrix& h) {
  Matrix y = matmul(layer_norm(h), ff.w);
  count_macs(OpStage::kOther, h.rows() * ff.w.rows() * ff.w.cols());
  add_row_bias(y, ff.b);
  Matrix out = h;
  auto dst = out.data();
  auto src = y.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gelu(src[i]);
  return out;
}

}  // namespace chunkwise::detail
