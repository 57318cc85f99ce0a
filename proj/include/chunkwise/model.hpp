#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chunkwise/matrix.hpp"

namespace chunkwise {

using TokenId = std::int32_t;

// Reserved token ids. Everything from kFirstWordToken up is an opaque word token.
inline constexpr TokenId kEndOfTranscript = 0;
inline constexpr TokenId kBeginOfTranscript = 1;
inline constexpr TokenId kFirstWordToken = 2;

struct ModelConfig {
  std::size_t d = 16;
  std::size_t layers_enc = 2;
  std::size_t layers_dec = 2;
  std::size_t vocab = 32;
  std::size_t t_max = 1500;
  std::uint64_t seed = 0;
  bool positional_encoding = true;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct AttentionWeights {
  Matrix wq, wk, wv;
  friend bool operator==(const AttentionWeights&, const AttentionWeights&) = default;
};

// h + GELU(LN(h) W + b)
struct FeedForward {
  Matrix w;  // d x d
  Matrix b;  // 1 x d
  friend bool operator==(const FeedForward&, const FeedForward&) = default;
};

struct EncoderLayer {
  AttentionWeights self;
  FeedForward ff;
  friend bool operator==(const EncoderLayer&, const EncoderLayer&) = default;
};

struct DecoderLayer {
  AttentionWeights self;
  AttentionWeights cross;
  FeedForward ff;
  friend bool operator==(const DecoderLayer&, const DecoderLayer&) = default;
};

struct ModelWeights {
  ModelConfig config;
  std::vector<EncoderLayer> encoder;
  std::vector<DecoderLayer> decoder;
  Matrix embedding;  // vocab x d
  Matrix output;     // d x vocab

  // Stable tensor naming used by the weight manifest and by init_weights' fill order.
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
  std::vector<std::pair<std::string, Matrix*>> named_tensors();

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

// Fills every tensor, in named_tensors() order, from a std::mt19937 seeded with
// config.seed: u = (draw >> 8) * 2^-24, w = (2u - 1) * sqrt(3) / sqrt(d).
ModelWeights init_weights(const ModelConfig& config);

// Sinusoidal position code for absolute position `pos` (0-based).
void add_position_code(std::span<float> row, std::size_t pos);

// ---- Low-rank adapters -------------------------------------------------------------

enum class AdapterSite { kEncoderSelf, kDecoderSelf, kDecoderCross };
enum class Projection { kQuery, kKey, kValue };

struct AdapterTarget {
  AdapterSite site = AdapterSite::kEncoderSelf;
  std::size_t layer = 0;
  Projection projection = Projection::kQuery;

  std::string name() const;  // e.g. "enc.0.self.q", "dec.1.cross.v"
  static AdapterTarget parse(const std::string& name);
  friend bool operator==(const AdapterTarget&, const AdapterTarget&) = default;
};

// Effective weight = W + scale * A * B, A is d x r, B is r x d.
struct LoraAdapter {
  AdapterTarget target;
  Matrix a;
  Matrix b;
  float scale = 1.0f;

  std::size_t rank() const noexcept { return a.cols(); }
  friend bool operator==(const LoraAdapter&, const LoraAdapter&) = default;
};

struct LoraSet {
  std::vector<LoraAdapter> adapters;

  std::size_t parameter_count() const noexcept;
  // A entries then B entries, adapter by adapter.
  std::vector<float> flatten() const;
  void assign(std::span<const float> flat);
  friend bool operator==(const LoraSet&, const LoraSet&) = default;
};

struct LoraOptions {
  std::size_t rank = 2;
  float alpha = 2.0f;  // scale = alpha / rank
  bool encoder_self = true;
  bool decoder_self = true;
  bool decoder_cross = true;
  std::uint64_t seed = 0;
};

// Adapters on q/k/v of every selected attention block. A is seeded uniform in
// [-1/sqrt(d), 1/sqrt(d)], B starts at zero so the set is initially inert.
LoraSet make_lora(const ModelConfig& config, const LoraOptions& options);

Matrix& projection_weight(ModelWeights& weights, const AdapterTarget& target);
const Matrix& projection_weight(const ModelWeights& weights, const AdapterTarget& target);

// w += scale * A * B
void add_lora_delta(Matrix& w, const LoraAdapter& adapter);

// Base weights are copied, never modified.
ModelWeights apply_lora(const ModelWeights& weights, const LoraSet& adapters);

}  // namespace chunkwise
