#include "chunkwise/recognizer.hpp"

#include <chrono>
#include <string>

#include "chunkwise/errors.hpp"

namespace chunkwise {

StreamingRecognizer::StreamingRecognizer(const ModelWeights& weights, RecognizerOptions options)
    : weights_(&weights),
      options_(options),
      encoder_(weights.config, options.spec),
      session_(weights.config, options.self_cache) {
  auto scorer = std::make_unique<ModelScorer>(weights, session_);
  if (options_.mode == DecodeMode::kGreedy)
    greedy_ = std::make_unique<GreedyStreamDecoder>(std::move(scorer), options_.decode);
  else
    beam_ = std::make_unique<BeamStreamDecoder>(std::move(scorer), options_.decode);
}

const TimelineEvent& StreamingRecognizer::push_chunk(const Matrix& features) {
  if ((greedy_ && greedy_->ended()) || (beam_ && beam_->ended()))
    throw StateError("recognizer: chunk pushed after the stream ended");
  OpCounter chunk_ops;
  const auto started = std::chrono::steady_clock::now();
  TimelineEvent event;
  {
    CountingScope scope(chunk_ops);
    const Matrix rows = encode_stream(encoder_, *weights_, features);
    extend_cross_cache(session_, *weights_, rows);
    const std::size_t k = timeline_.size() + 1;
    event = greedy_ ? greedy_->step(k, stream_time_ms()) : beam_->step(k, stream_time_ms());
  }
  const auto elapsed = std::chrono::steady_clock::now() - started;
  const double seconds = options_.clock == ClockMode::kWall
                             ? std::chrono::duration<double>(elapsed).count()
                             : static_cast<double>(chunk_ops.total_macs()) / options_.counted_macs_per_second;
  ops_.projection_macs += chunk_ops.projection_macs;
  ops_.dot_product_macs += chunk_ops.dot_product_macs;
  ops_.value_macs += chunk_ops.value_macs;
  ops_.other_macs += chunk_ops.other_macs;
  ops_.cache_bytes += chunk_ops.cache_bytes;
  event.latency_ms = seconds * 1000.0;
  chunk_seconds_.push_back(seconds);
  audio_seconds_.push_back(static_cast<double>(features.rows() * kFrameMs) / 1000.0);
  timeline_.push_back(std::move(event));
  return timeline_.back();
}

std::vector<TokenId> StreamingRecognizer::finish() { return greedy_ ? greedy_->finish() : beam_->finish(); }

std::vector<WordTimestamp> StreamingRecognizer::word_timestamps() const {
  if (!greedy_) throw StateError("recognizer: word timestamps need greedy decoding");
  return greedy_->word_timestamps(stream_time_ms());
}

const Hypothesis& StreamingRecognizer::best_hypothesis() const {
  return greedy_ ? greedy_->hypothesis() : beam_->best();
}

std::vector<float> StreamingRecognizer::next_distribution() {
  ModelScorer scorer(*weights_, DecoderSession(session_));
  return scorer.next_log_probs(best_hypothesis().transcript());
}

std::vector<Matrix> split_chunks(const Matrix& features, const MaskSpec& spec) {
  if (features.rows() < spec.tau0()) {
    throw InsufficientInputError("stream: " + std::to_string(features.rows()) +
                                 " frames is shorter than the initial chunk of " + std::to_string(spec.tau0()));
  }
  std::vector<Matrix> chunks;
  chunks.push_back(features.slice_rows(0, spec.tau0()));
  for (std::size_t at = spec.tau0(); at + spec.tau() <= features.rows(); at += spec.tau())
    chunks.push_back(features.slice_rows(at, at + spec.tau()));
  return chunks;
}

StreamResult run_stream(const ModelWeights& weights, const Matrix& features, const RecognizerOptions& options) {
  StreamingRecognizer rec(weights, options);
  for (const Matrix& chunk : split_chunks(features, options.spec)) rec.push_chunk(chunk);
  StreamResult out;
  out.transcript = rec.finish();
  if (options.mode == DecodeMode::kGreedy) out.timestamps = rec.word_timestamps();
  out.timeline = rec.timeline();
  out.chunk_seconds = rec.chunk_seconds();
  out.audio_seconds = rec.audio_seconds();
  out.ops = rec.ops();
  return out;
}

}  // namespace chunkwise
