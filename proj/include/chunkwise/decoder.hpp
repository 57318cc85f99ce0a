#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "chunkwise/model.hpp"

namespace chunkwise {

// Cross-attention keys/values of every encoder frame seen so far, per decoder layer.
struct CrossCache {
  std::vector<Matrix> keys;
  std::vector<Matrix> values;
  std::size_t frames = 0;
};

// Approximate per-layer self-attention cache over an emitted token prefix. Rows are
// reused as long as the token prefix matches, even after new encoder frames arrive.
struct SelfAttentionCache {
  std::vector<TokenId> tokens;
  std::vector<Matrix> keys;
  std::vector<Matrix> values;
};

// Decoder-side streaming state. Copies share the cross-attention cache (it only ever
// grows with the encoder output) and own their self-attention cache.
class DecoderSession {
 public:
  explicit DecoderSession(const ModelConfig& config, bool self_cache = false);

  std::size_t encoder_frames() const noexcept { return cross_->frames; }
  bool self_cache_enabled() const noexcept { return self_cache_enabled_; }
  const CrossCache& cross() const noexcept { return *cross_; }
  CrossCache& cross() noexcept { return *cross_; }
  const SelfAttentionCache& self_cache() const noexcept { return self_; }
  SelfAttentionCache& self_cache() noexcept { return self_; }

  // A copy with its own (deep-copied) cross cache.
  DecoderSession detached() const;

 private:
  std::shared_ptr<CrossCache> cross_;
  bool self_cache_enabled_;
  SelfAttentionCache self_;
};

// Projects new encoder rows through every decoder layer's cross keys/values and appends them.
void extend_cross_cache(DecoderSession& session, const ModelWeights& weights, const Matrix& new_encoder_rows);

// Fresh session over a complete encoder output.
DecoderSession build_session(const ModelWeights& weights, const Matrix& encoder_output, bool self_cache = false);

// log P(next | tokens, encoder frames so far). `tokens` starts with the begin-of-transcript id.
std::vector<float> decoder_step(DecoderSession& session, const ModelWeights& weights,
                                std::span<const TokenId> tokens);

// Teacher-forced pass without any self cache: row p holds log P(token p+1 | tokens[0..p]).
Matrix decoder_forward(const ModelWeights& weights, const CrossCache& cross, std::span<const TokenId> tokens);

// log-softmax of a logit row, float64 reduction.
std::vector<float> log_softmax(std::span<const float> logits);

}  // namespace chunkwise
