#include "chunkwise/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chunkwise/attention.hpp"
#include "chunkwise/errors.hpp"
#include "layers.hpp"

namespace chunkwise {

using detail::feed_forward;
using detail::project;

DecoderSession::DecoderSession(const ModelConfig& config, bool self_cache)
    : cross_(std::make_shared<CrossCache>()), self_cache_enabled_(self_cache) {
  cross_->keys.assign(config.layers_dec, Matrix(0, config.d));
  cross_->values.assign(config.layers_dec, Matrix(0, config.d));
}

DecoderSession DecoderSession::detached() const {
  DecoderSession copy = *this;
  copy.cross_ = std::make_shared<CrossCache>(*cross_);
  return copy;
}

void extend_cross_cache(DecoderSession& session, const ModelWeights& weights, const Matrix& new_encoder_rows) {
  if (new_encoder_rows.rows() == 0) return;
  if (new_encoder_rows.cols() != weights.config.d) throw ShapeError("extend_cross_cache: width mismatch");
  CrossCache& cross = session.cross();
  if (cross.keys.size() != weights.decoder.size()) throw ShapeError("extend_cross_cache: layer mismatch");
  for (std::size_t l = 0; l < weights.decoder.size(); ++l) {
    cross.keys[l].append_rows(project(new_encoder_rows, weights.decoder[l].cross.wk));
    cross.values[l].append_rows(project(new_encoder_rows, weights.decoder[l].cross.wv));
  }
  count_cache_bytes(2 * weights.decoder.size() * new_encoder_rows.rows() * weights.config.d * sizeof(float));
  cross.frames += new_encoder_rows.rows();
}

DecoderSession build_session(const ModelWeights& weights, const Matrix& encoder_output, bool self_cache) {
  DecoderSession s(weights.config, self_cache);
  extend_cross_cache(s, weights, encoder_output);
  return s;
}

std::vector<float> log_softmax(std::span<const float> logits) {
  const float mx = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (float x : logits) denom += std::exp(static_cast<double>(x) - mx);
  const double log_denom = std::log(denom) + mx;
  std::vector<float> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(logits[i] - log_denom);
  return out;
}

namespace {

void check_tokens(const ModelWeights& weights, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw DomainError("decoder: token sequence is empty");
  for (TokenId t : tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= weights.config.vocab)
      throw DomainError("decoder: token id " + std::to_string(t) + " outside the vocabulary");
}

// Runs positions [start, tokens.size()) through the decoder. `past_k/past_v` hold
// per-layer self-attention rows for positions [0, start) and receive the new rows.
// Returns the final hidden rows of the new positions.
Matrix decode_positions(const ModelWeights& weights, const CrossCache& cross, std::span<const TokenId> tokens,
                        std::size_t start, std::vector<Matrix>& past_k, std::vector<Matrix>& past_v) {
  if (cross.frames == 0) throw StateError("decoder: no encoder frames available for cross-attention");
  const std::size_t d = weights.config.d;
  const std::size_t n = tokens.size();
  Matrix u(n - start, d);
  for (std::size_t p = start; p < n; ++p) {
    auto row = u.row(p - start);
    auto emb = weights.embedding.row(static_cast<std::size_t>(tokens[p]));
    std::copy(emb.begin(), emb.end(), row.begin());
    if (weights.config.positional_encoding) add_position_code(row, p);
  }
  const AttentionMask causal = AttentionMask::from_predicate(
      n - start, n, [start](std::size_t r, std::size_t c) { return c <= start + r; });
  for (std::size_t l = 0; l < weights.decoder.size(); ++l) {
    const DecoderLayer& layer = weights.decoder[l];
    const Matrix a = layer_norm(u);
    const Matrix q = project(a, layer.self.wq);
    past_k[l].append_rows(project(a, layer.self.wk));
    past_v[l].append_rows(project(a, layer.self.wv));
    const Matrix h1 = add(u, masked_attention(q, past_k[l], past_v[l], causal));
    const Matrix qc = project(layer_norm(h1), layer.cross.wq);
    const Matrix h2 = add(h1, attention(qc, cross.keys[l], cross.values[l]));
    u = feed_forward(layer.ff, h2);
  }
  return u;
}

Matrix logits_of(const ModelWeights& weights, const Matrix& hidden) {
  count_macs(OpStage::kOther, hidden.rows() * weights.output.rows() * weights.output.cols());
  return matmul(hidden, weights.output);
}

}  // namespace

Matrix decoder_forward(const ModelWeights& weights, const CrossCache& cross, std::span<const TokenId> tokens) {
  check_tokens(weights, tokens);
  std::vector<Matrix> k(weights.decoder.size(), Matrix(0, weights.config.d));
  std::vector<Matrix> v = k;
  const Matrix logits = logits_of(weights, decode_positions(weights, cross, tokens, 0, k, v));
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto lp = log_softmax(logits.row(r));
    std::copy(lp.begin(), lp.end(), out.row(r).begin());
  }
  return out;
}

std::vector<float> decoder_step(DecoderSession& session, const ModelWeights& weights,
                                std::span<const TokenId> tokens) {
  check_tokens(weights, tokens);
  const std::size_t layers = weights.decoder.size();
  if (!session.self_cache_enabled()) {
    std::vector<Matrix> k(layers, Matrix(0, weights.config.d));
    std::vector<Matrix> v = k;
    const Matrix hidden = decode_positions(weights, session.cross(), tokens, 0, k, v);
    const Matrix last = hidden.slice_rows(hidden.rows() - 1, hidden.rows());
    return log_softmax(logits_of(weights, last).row(0));
  }

  SelfAttentionCache& cache = session.self_cache();
  if (cache.keys.size() != layers) {
    cache.keys.assign(layers, Matrix(0, weights.config.d));
    cache.values.assign(layers, Matrix(0, weights.config.d));
    cache.tokens.clear();
  }
  // Reuse the longest matching prefix, always recomputing the final position.
  std::size_t reuse = 0;
  while (reuse < cache.tokens.size() && reuse + 1 < tokens.size() && cache.tokens[reuse] == tokens[reuse]) ++reuse;
  for (std::size_t l = 0; l < layers; ++l) {
    cache.keys[l].truncate_rows(reuse);
    cache.values[l].truncate_rows(reuse);
  }
  const Matrix hidden = decode_positions(weights, session.cross(), tokens, reuse, cache.keys, cache.values);
  cache.tokens.assign(tokens.begin(), tokens.end());
  count_cache_bytes(2 * layers * (tokens.size() - reuse) * weights.config.d * sizeof(float));
  const Matrix last = hidden.slice_rows(hidden.rows() - 1, hidden.rows());
  return log_softmax(logits_of(weights, last).row(0));
}

}  // namespace chunkwise
