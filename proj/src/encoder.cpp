#include "chunkwise/encoder.hpp"

#include <algorithm>
#include <string>

#include "chunkwise/errors.hpp"
#include "chunkwise/op_counter.hpp"
#include "layers.hpp"

namespace chunkwise {

namespace {

using detail::feed_forward;
using detail::project;

Matrix with_positions(const ModelWeights& weights, const Matrix& x, std::size_t first_position) {
  if (x.cols() != weights.config.d) {
    throw ShapeError("encoder: features have " + std::to_string(x.cols()) + " columns, model d = " +
                     std::to_string(weights.config.d));
  }
  Matrix u = x;
  if (weights.config.positional_encoding)
    for (std::size_t r = 0; r < u.rows(); ++r) add_position_code(u.row(r), first_position + r);
  return u;
}

// One encoder layer over new rows `u`, attending to `past_k/past_v` (earlier frames)
// plus the new rows. New keys/values are appended to past_k/past_v.
Matrix encoder_layer(const EncoderLayer& layer, const Matrix& u, Matrix& past_k, Matrix& past_v,
                     const AttentionMask& mask) {
  const Matrix a = layer_norm(u);
  const Matrix q = project(a, layer.self.wq);
  past_k.append_rows(project(a, layer.self.wk));
  past_v.append_rows(project(a, layer.self.wv));
  Matrix h = add(u, masked_attention(q, past_k, past_v, mask));
  return feed_forward(layer.ff, h);
}

}  // namespace

Matrix encode_with_mask(const ModelWeights& weights, const Matrix& x, const AttentionMask& mask) {
  if (x.rows() > weights.config.t_max) {
    throw CapacityError("encoder: " + std::to_string(x.rows()) + " frames exceeds t_max " +
                        std::to_string(weights.config.t_max));
  }
  if (mask.rows() != x.rows() || mask.cols() != x.rows()) throw ShapeError("encoder: mask shape mismatch");
  Matrix u = with_positions(weights, x, 0);
  for (const auto& layer : weights.encoder) {
    Matrix k(0, weights.config.d), v(0, weights.config.d);
    u = encoder_layer(layer, u, k, v, mask);
  }
  return u;
}

Matrix encode_noncausal(const ModelWeights& weights, const Matrix& x) {
  return encode_with_mask(weights, x, AttentionMask::all(x.rows(), x.rows()));
}

Matrix encode_full_masked(const ModelWeights& weights, const Matrix& x, const MaskSpec& spec) {
  if (!spec.is_boundary(x.rows())) {
    throw ChunkingError("encode_full_masked: " + std::to_string(x.rows()) +
                        " frames is not a chunk boundary (tau=" + std::to_string(spec.tau()) +
                        ", tau0=" + std::to_string(spec.tau0()) + ")");
  }
  return encode_with_mask(weights, x, build_frame_mask(0, x.rows(), x.rows(), spec));
}

EncoderCache::EncoderCache(const ModelConfig& config, const MaskSpec& spec)
    : spec_(spec), t_max_(config.t_max) {
  if (config.t_max < spec.tau0()) throw DomainError("encoder cache: t_max smaller than the initial chunk");
  keys_.assign(config.layers_enc, Matrix(0, config.d));
  values_.assign(config.layers_enc, Matrix(0, config.d));
}

void EncoderCache::clear() {
  frames_seen_ = 0;
  for (auto& k : keys_) k.truncate_rows(0);
  for (auto& v : values_) v.truncate_rows(0);
}

Matrix encode_stream(EncoderCache& cache, const ModelWeights& weights, const Matrix& chunk) {
  if (cache.layers() != weights.encoder.size()) throw ShapeError("encode_stream: cache/model layer mismatch");
  const std::size_t expected = cache.frames_seen_ == 0 ? cache.spec_.tau0() : cache.spec_.tau();
  if (chunk.rows() != expected) {
    throw ChunkingError("encode_stream: chunk has " + std::to_string(chunk.rows()) + " frames, expected " +
                        std::to_string(expected));
  }
  const std::size_t begin = cache.frames_seen_;
  const std::size_t end = begin + chunk.rows();
  if (end > cache.t_max_) {
    throw CapacityError("encode_stream: stream would reach " + std::to_string(end) +
                        " frames, beyond t_max " + std::to_string(cache.t_max_));
  }
  const AttentionMask mask = build_frame_mask(begin, end, end, cache.spec_);
  Matrix u = with_positions(weights, chunk, begin);
  for (std::size_t l = 0; l < weights.encoder.size(); ++l)
    u = encoder_layer(weights.encoder[l], u, cache.keys_[l], cache.values_[l], mask);
  count_cache_bytes(2 * weights.encoder.size() * chunk.rows() * weights.config.d * sizeof(float));
  cache.frames_seen_ = end;
  return u;
}

Matrix encode_chunked(const ModelWeights& weights, const Matrix& x, const MaskSpec& spec) {
  if (!spec.is_boundary(x.rows())) throw ChunkingError("encode_chunked: input is not a chunk boundary");
  EncoderCache cache(weights.config, spec);
  Matrix out(0, weights.config.d);
  for (std::size_t at = 0; at < x.rows();) {
    const std::size_t n = at == 0 ? spec.tau0() : spec.tau();
    out.append_rows(encode_stream(cache, weights, x.slice_rows(at, at + n)));
    at += n;
  }
  return out;
}

namespace {

Matrix first_layer_self_attention(const ModelWeights& weights, const Matrix& u, std::size_t rows,
                                  const MaskSpec& spec, bool masked) {
  const Matrix a = layer_norm(u.slice_rows(0, rows));
  const auto& sa = weights.encoder.front().self;
  const Matrix q = matmul(a, sa.wq);
  const Matrix k = matmul(a, sa.wk);
  const Matrix v = matmul(a, sa.wv);
  const AttentionMask mask = masked ? build_frame_mask(0, rows, rows, spec) : AttentionMask::all(rows, rows);
  return masked_attention(q, k, v, mask);
}

}  // namespace

double sa_output_delta(const ModelWeights& weights, const Matrix& u, std::size_t k, const MaskSpec& spec,
                       std::size_t i, bool masked) {
  if (k == 0) throw DomainError("sa_output_delta: k must be >= 1");
  const std::size_t short_rows = k * spec.tau();
  const std::size_t long_rows = (k + 1) * spec.tau();
  if (long_rows > u.rows()) throw DomainError("sa_output_delta: (k+1) tau exceeds the input rows");
  if (i >= short_rows) throw DomainError("sa_output_delta: row index outside the first k chunks");
  if (u.cols() != weights.config.d) throw ShapeError("sa_output_delta: input width mismatch");
  const Matrix shorter = first_layer_self_attention(weights, u, short_rows, spec, masked);
  const Matrix longer = first_layer_self_attention(weights, u, long_rows, spec, masked);
  std::vector<float> diff(u.cols());
  for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = shorter(i, c) - longer(i, c);
  return l2_norm(diff);
}

double max_value_norm(const ModelWeights& weights, const Matrix& u, std::size_t rows) {
  const Matrix v = matmul(layer_norm(u.slice_rows(0, rows)), weights.encoder.front().self.wv);
  double worst = 0.0;
  for (std::size_t r = 0; r < v.rows(); ++r) worst = std::max(worst, l2_norm(v.row(r)));
  return worst;
}

}  // namespace chunkwise
