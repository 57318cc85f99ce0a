#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chunkwise {

struct EditCounts {
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t substitutions = 0;
  std::size_t correct = 0;

  std::size_t errors() const noexcept { return insertions + deletions + substitutions; }
  std::size_t reference_length() const noexcept { return correct + deletions + substitutions; }
  std::size_t hypothesis_length() const noexcept { return correct + insertions + substitutions; }
  EditCounts& operator+=(const EditCounts& o) noexcept;
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

// Lower-cases and strips leading/trailing punctuation from each whitespace-separated word.
std::vector<std::string> tokenize_words(std::string_view text);

// Minimum edit distance alignment. Among minimum-cost alignments the one with the most
// substitutions (equivalently fewest insertions + deletions) is chosen, which fixes all
// four counts uniquely.
EditCounts edit_counts(std::span<const std::string> reference, std::span<const std::string> hypothesis);

// (I + D + S) / (C + D + S); throws DomainError on an empty reference.
double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis);

// One partial hypothesis of the stream, as scored words.
struct HypothesisEvent {
  std::int64_t time_ms = 0;
  std::vector<std::string> words;
};

struct AlignedWord {
  std::string word;
  std::int64_t end_ms = 0;
};

struct ReferenceAlignment {
  std::vector<AlignedWord> words;
  std::optional<std::int64_t> duration_ms;

  std::vector<std::string> word_list() const;
};

// Error ratio of summed counts. A zero denominator counts as one.
double error_ratio(const EditCounts& totals);

// Each event is scored against the first min(|hyp|, N) reference words.
EditCounts rwer_counts(std::span<const std::string> reference, std::span<const HypothesisEvent> events);
double rwer(std::span<const std::string> reference, std::span<const HypothesisEvent> events);

// Each event is scored against the reference words whose end time is <= the event time.
EditCounts arwer_counts(const ReferenceAlignment& reference, std::span<const HypothesisEvent> events);
double arwer(const ReferenceAlignment& reference, std::span<const HypothesisEvent> events);

struct TimedWord {
  std::string word;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

struct TimestampScores {
  double precision = 0.0;
  double recall = 0.0;
  double sd_ms = 0.0;
  double ed_ms = 0.0;
  std::size_t hits = 0;
  std::size_t matched = 0;
  std::size_t reference_count = 0;
  std::size_t hypothesis_count = 0;
};

// Streaming timestamps mark the moment a word is recognized, so a hypothesized word's
// start is compared with the reference word's end time and its end (the next word's
// recognition, or stream end) with the following reference word's end time (or the
// utterance duration when known).
//
// Words are matched one-to-one in temporal order by identical case-folded text. A
// matched word is a hit when its start error is <= threshold_ms. Reference words ending
// at or before `exclude_ms`, and hypothesis words starting at or before it, are ignored.
// SD / ED are mean absolute start / end errors over matched words.
TimestampScores timestamp_metrics(const ReferenceAlignment& reference, std::span<const TimedWord> hypothesis,
                                  double threshold_ms, std::int64_t exclude_ms = 600);

struct RuntimeStats {
  std::vector<double> chunk_seconds;  // t_c per chunk
  std::vector<double> audio_seconds;  // C per chunk
};

struct RuntimeSummary {
  std::vector<double> rtf;
  double mean_rtf = 0.0;
  double mean_latency_s = 0.0;
};

RuntimeSummary rtf_stats(const RuntimeStats& stats);

}  // namespace chunkwise
