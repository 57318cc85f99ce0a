#pragma once

#include <cstddef>
#include <vector>

#include "chunkwise/attention.hpp"
#include "chunkwise/mask.hpp"
#include "chunkwise/model.hpp"

namespace chunkwise {

// Bidirectional encoder over all frames of `x` (rows = frames, cols = d).
Matrix encode_noncausal(const ModelWeights& weights, const Matrix& x);

// One-pass encoder with the blocked causal mask at every layer. x.rows() must be a
// chunk boundary of `spec`.
Matrix encode_full_masked(const ModelWeights& weights, const Matrix& x, const MaskSpec& spec);

// Encoder with an arbitrary frame mask (rows x rows) applied at every layer.
Matrix encode_with_mask(const ModelWeights& weights, const Matrix& x, const AttentionMask& mask);

// Per-layer keys/values of every frame seen so far. Append-only.
class EncoderCache {
 public:
  EncoderCache(const ModelConfig& config, const MaskSpec& spec);

  const MaskSpec& spec() const noexcept { return spec_; }
  std::size_t frames_seen() const noexcept { return frames_seen_; }
  std::size_t layers() const noexcept { return keys_.size(); }
  const Matrix& keys(std::size_t layer) const { return keys_.at(layer); }
  const Matrix& values(std::size_t layer) const { return values_.at(layer); }

  // Drops every cached row; the next chunk must again be an initial chunk.
  void clear();

 private:
  friend Matrix encode_stream(EncoderCache&, const ModelWeights&, const Matrix&);
  MaskSpec spec_;
  std::size_t t_max_;
  std::size_t frames_seen_ = 0;
  std::vector<Matrix> keys_;
  std::vector<Matrix> values_;
};

// Encodes one chunk (tau0 rows first, tau rows afterwards) against the cache and
// returns only the new representation rows.
Matrix encode_stream(EncoderCache& cache, const ModelWeights& weights, const Matrix& chunk);

// Streams `x` chunk by chunk through a fresh cache and concatenates the outputs.
Matrix encode_chunked(const ModelWeights& weights, const Matrix& x, const MaskSpec& spec);

// || SA(U[0..k tau))_i - SA(U[0..(k+1) tau))_i ||_2 for the first encoder layer's
// self-attention, unmasked by default or under the blocked causal mask. `i` is 0-based.
double sa_output_delta(const ModelWeights& weights, const Matrix& u, std::size_t k, const MaskSpec& spec,
                       std::size_t i, bool masked = false);

// max_j ||V_j||_2 over the first `rows` rows of the first encoder layer's values.
double max_value_norm(const ModelWeights& weights, const Matrix& u, std::size_t rows);

}  // namespace chunkwise
