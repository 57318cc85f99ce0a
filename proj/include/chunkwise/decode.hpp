#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "chunkwise/decoder.hpp"
#include "chunkwise/model.hpp"

namespace chunkwise {

// Indices of the k largest scores, ordered by score descending; ties go to the lower index.
std::vector<std::size_t> topk(std::span<const float> scores, std::size_t k);

// Greedy stability: the token's probability did not drop since its last check, or it is
// the argmax of the new distribution (lower index wins ties).
bool is_stable_greedy(double prev_prob, std::span<const float> cur_dist, TokenId token);

// Beam stability: the token is still within the top-b of the new distribution.
bool is_stable_beam(std::span<const float> cur_dist, TokenId token, std::size_t b);

// Source of next-token log-probabilities given the current acoustic context. Each
// hypothesis owns one; clones share whatever acoustic state the stream advances.
class ChunkScorer {
 public:
  virtual ~ChunkScorer() = default;
  // `prefix` holds emitted tokens only (no begin-of-transcript marker).
  virtual std::vector<float> next_log_probs(std::span<const TokenId> prefix) = 0;
  virtual std::unique_ptr<ChunkScorer> clone() const = 0;
};

// Scorer backed by the transformer decoder and a streaming session.
class ModelScorer final : public ChunkScorer {
 public:
  ModelScorer(const ModelWeights& weights, DecoderSession session);
  std::vector<float> next_log_probs(std::span<const TokenId> prefix) override;
  std::unique_ptr<ChunkScorer> clone() const override;
  DecoderSession& session() noexcept { return session_; }

 private:
  const ModelWeights* weights_;
  DecoderSession session_;
  std::vector<TokenId> buffer_;
};

// Scorer driven by a callable of (chunk index, prefix). The chunk index is read from a
// counter shared by every clone, so advancing it moves all hypotheses to the next chunk.
class FunctionScorer final : public ChunkScorer {
 public:
  using Fn = std::function<std::vector<float>(std::size_t chunk, std::span<const TokenId> prefix)>;
  FunctionScorer(Fn fn, std::shared_ptr<const std::size_t> chunk);
  std::vector<float> next_log_probs(std::span<const TokenId> prefix) override;
  std::unique_ptr<ChunkScorer> clone() const override;

 private:
  std::shared_ptr<const Fn> fn_;
  std::shared_ptr<const std::size_t> chunk_;
};

// Sum of log P(token_i | tokens_<i) under the scorer's current context.
double sequence_logprob(ChunkScorer& scorer, std::span<const TokenId> tokens);

struct TokenRecord {
  TokenId token = kEndOfTranscript;
  std::size_t emit_chunk = 0;
  float logprob = 0.0f;  // log-probability at the most recent check or emission
  std::optional<std::int64_t> timestamp_ms;
};

struct Hypothesis {
  std::vector<TokenRecord> records;
  double logprob_path = 0.0;

  bool finished() const noexcept { return !records.empty() && records.back().token == kEndOfTranscript; }
  std::vector<TokenId> tokens() const;
  // Tokens with a trailing end-of-transcript removed.
  std::vector<TokenId> transcript() const;
  void recompute_path();
  void truncate(std::size_t length);
};

struct TimelineEvent {
  std::size_t chunk = 0;
  std::int64_t time_ms = 0;
  std::vector<TokenId> committed;  // prefix no later chunk may modify
  std::vector<TokenId> tokens;     // current best hypothesis, trailing EOT removed
  double latency_ms = 0.0;
};

using Timeline = std::vector<TimelineEvent>;

struct WordTimestamp {
  std::size_t token_index = 0;
  TokenId token = kEndOfTranscript;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

struct DecodeOptions {
  std::size_t window = 2;       // n: trailing tokens re-checked per chunk
  std::size_t beam = 5;         // b
  std::size_t max_tokens = 48;  // hard cap on hypothesis length
};

// Streaming greedy decoder with token regression and end-of-transcript pauses.
// With `regression` off it is the plain greedy baseline: emitted tokens are never
// revisited and decoding simply resumes after a trailing EOT on every chunk.
class GreedyStreamDecoder {
 public:
  GreedyStreamDecoder(std::unique_ptr<ChunkScorer> scorer, DecodeOptions options, bool regression = true);

  // Handles one chunk whose acoustic context the caller has already pushed to the scorer.
  TimelineEvent step(std::size_t chunk, std::int64_t time_ms);
  // Ends the stream and returns the transcript (EOT stripped). Later steps throw StateError.
  std::vector<TokenId> finish();

  const Hypothesis& hypothesis() const noexcept { return hyp_; }
  // Regression offset m of the last step (0 when nothing or only the newest token was dropped).
  std::size_t last_regression_offset() const noexcept { return last_offset_; }
  bool ended() const noexcept { return ended_; }
  ChunkScorer& scorer() noexcept { return *scorer_; }

  // Word timestamps from the tokens that received one; each word ends where the next
  // timestamped word starts, the last at `stream_end_ms`. A token gets the current
  // stream time when it is decoded in a chunk whose regression offset is 0; tokens
  // re-decoded after a deeper regression keep whatever time their position held.
  std::vector<WordTimestamp> word_timestamps(std::int64_t stream_end_ms) const;

 private:
  std::unique_ptr<ChunkScorer> scorer_;
  DecodeOptions options_;
  bool regression_;
  Hypothesis hyp_;
  std::vector<std::optional<std::int64_t>> position_ts_;
  std::size_t last_offset_ = 0;
  bool ended_ = false;
};

// Streaming beam search with per-hypothesis token regression (top-b stability).
class BeamStreamDecoder {
 public:
  BeamStreamDecoder(std::unique_ptr<ChunkScorer> scorer, DecodeOptions options);

  TimelineEvent step(std::size_t chunk, std::int64_t time_ms);
  std::vector<TokenId> finish();

  std::size_t size() const noexcept { return beam_.size(); }
  const Hypothesis& hypothesis(std::size_t i) const { return beam_.at(i).hyp; }
  const Hypothesis& best() const { return beam_.front().hyp; }
  bool ended() const noexcept { return ended_; }

 private:
  struct Entry {
    Hypothesis hyp;
    std::unique_ptr<ChunkScorer> scorer;
  };
  DecodeOptions options_;
  std::vector<Entry> beam_;
  bool ended_ = false;
};

// Start of the re-check window: the last `window` non-EOT tokens plus a trailing EOT.
std::size_t check_window_start(const Hypothesis& hyp, std::size_t window);

}  // namespace chunkwise
