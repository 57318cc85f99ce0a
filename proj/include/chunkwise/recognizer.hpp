#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "chunkwise/decode.hpp"
#include "chunkwise/encoder.hpp"
#include "chunkwise/mask.hpp"
#include "chunkwise/op_counter.hpp"

namespace chunkwise {

enum class DecodeMode { kGreedy, kBeam };

// How per-chunk processing time is measured. `kCounted` derives it from the
// multiply-accumulate count at a nominal throughput, which makes runs reproducible.
enum class ClockMode { kWall, kCounted };

struct RecognizerOptions {
  MaskSpec spec{4, 8};
  DecodeMode mode = DecodeMode::kGreedy;
  DecodeOptions decode;
  bool self_cache = false;
  ClockMode clock = ClockMode::kWall;
  double counted_macs_per_second = 1e9;
};

// Drives one stream: encoder KV-cache -> decoder cross-cache -> streaming decoder.
class StreamingRecognizer {
 public:
  StreamingRecognizer(const ModelWeights& weights, RecognizerOptions options);

  // Feeds one chunk of front-end features (tau0 rows first, then tau rows).
  const TimelineEvent& push_chunk(const Matrix& features);
  std::vector<TokenId> finish();

  const Timeline& timeline() const noexcept { return timeline_; }
  std::size_t frames_seen() const noexcept { return encoder_.frames_seen(); }
  std::int64_t stream_time_ms() const noexcept {
    return static_cast<std::int64_t>(frames_seen()) * kFrameMs;
  }
  // Processing seconds per chunk and the audio seconds each chunk covered.
  const std::vector<double>& chunk_seconds() const noexcept { return chunk_seconds_; }
  const std::vector<double>& audio_seconds() const noexcept { return audio_seconds_; }
  const OpCounter& ops() const noexcept { return ops_; }

  // Greedy mode only.
  std::vector<WordTimestamp> word_timestamps() const;
  const Hypothesis& best_hypothesis() const;

  // Next-token distribution for the current best hypothesis (diagnostics).
  std::vector<float> next_distribution();

 private:
  const ModelWeights* weights_;
  RecognizerOptions options_;
  EncoderCache encoder_;
  DecoderSession session_;
  std::unique_ptr<GreedyStreamDecoder> greedy_;
  std::unique_ptr<BeamStreamDecoder> beam_;
  Timeline timeline_;
  std::vector<double> chunk_seconds_;
  std::vector<double> audio_seconds_;
  OpCounter ops_;
};

// Splits `features` into tau0 / tau chunks; trailing frames that do not fill a chunk are
// dropped. Throws InsufficientInputError when fewer than tau0 frames are given.
std::vector<Matrix> split_chunks(const Matrix& features, const MaskSpec& spec);

struct StreamResult {
  Timeline timeline;
  std::vector<TokenId> transcript;
  std::vector<WordTimestamp> timestamps;  // greedy mode only
  std::vector<double> chunk_seconds;
  std::vector<double> audio_seconds;
  OpCounter ops;
};

StreamResult run_stream(const ModelWeights& weights, const Matrix& features, const RecognizerOptions& options);

}  // namespace chunkwise
