#include "chunkwise/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <utility>

#include "chunkwise/errors.hpp"

namespace chunkwise {

EditCounts& EditCounts::operator+=(const EditCounts& o) noexcept {
  insertions += o.insertions;
  deletions += o.deletions;
  substitutions += o.substitutions;
  correct += o.correct;
  return *this;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) {
    std::size_t b = 0, e = w.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(w[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(w[e - 1]))) --e;
    if (b == e) continue;
    std::string word = w.substr(b, e - b);
    for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(word));
  }
  return out;
}

EditCounts edit_counts(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  const std::size_t n = reference.size(), m = hypothesis.size();
  // cost = (edits, insertions + deletions), compared lexicographically.
  using Cost = std::pair<std::size_t, std::size_t>;
  std::vector<Cost> dp((n + 1) * (m + 1));
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 0; i <= n; ++i) dp[at(i, 0)] = {i, i};
  for (std::size_t j = 0; j <= m; ++j) dp[at(0, j)] = {j, j};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      Cost diag = dp[at(i - 1, j - 1)];
      diag.first += same ? 0 : 1;
      Cost del = dp[at(i - 1, j)];
      del.first += 1;
      del.second += 1;
      Cost ins = dp[at(i, j - 1)];
      ins.first += 1;
      ins.second += 1;
      dp[at(i, j)] = std::min({diag, del, ins});
    }
  }
  const auto [edits, indels] = dp[at(n, m)];
  // I - D = m - n and I + D = indels determine everything else.
  EditCounts c;
  c.insertions = (indels + m - n) / 2;
  c.deletions = indels - c.insertions;
  c.substitutions = edits - indels;
  c.correct = n - c.deletions - c.substitutions;
  return c;
}

double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  if (reference.empty()) throw DomainError("wer: empty reference");
  return error_ratio(edit_counts(reference, hypothesis));
}

std::vector<std::string> ReferenceAlignment::word_list() const {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(w.word);
  return out;
}

double error_ratio(const EditCounts& totals) {
  const std::size_t denom = std::max<std::size_t>(totals.reference_length(), 1);
  return static_cast<double>(totals.errors()) / static_cast<double>(denom);
}

EditCounts rwer_counts(std::span<const std::string> reference, std::span<const HypothesisEvent> events) {
  EditCounts total;
  for (const auto& ev : events) {
    const std::size_t len = std::min(ev.words.size(), reference.size());
    total += edit_counts(reference.first(len), ev.words);
  }
  return total;
}

double rwer(std::span<const std::string> reference, std::span<const HypothesisEvent> events) {
  return error_ratio(rwer_counts(reference, events));
}

EditCounts arwer_counts(const ReferenceAlignment& reference, std::span<const HypothesisEvent> events) {
  const auto words = reference.word_list();
  EditCounts total;
  for (const auto& ev : events) {
    std::size_t due = 0;
    while (due < reference.words.size() && reference.words[due].end_ms <= ev.time_ms) ++due;
    total += edit_counts(std::span<const std::string>(words).first(due), ev.words);
  }
  return total;
}

double arwer(const ReferenceAlignment& reference, std::span<const HypothesisEvent> events) {
  return error_ratio(arwer_counts(reference, events));
}

TimestampScores timestamp_metrics(const ReferenceAlignment& reference, std::span<const TimedWord> hypothesis,
                                  double threshold_ms, std::int64_t exclude_ms) {
  if (!(threshold_ms > 0.0)) throw DomainError("timestamp_metrics: threshold must be positive");
  auto fold = [](const std::string& w) {
    auto t = tokenize_words(w);
    return t.empty() ? std::string() : t.front();
  };
  struct RefWord {
    std::string word;
    std::int64_t end_ms;
    std::optional<std::int64_t> next_end_ms;
  };
  std::vector<RefWord> refs;
  for (std::size_t i = 0; i < reference.words.size(); ++i) {
    const auto& w = reference.words[i];
    if (w.end_ms <= exclude_ms) continue;
    std::optional<std::int64_t> next =
        i + 1 < reference.words.size() ? std::optional(reference.words[i + 1].end_ms) : reference.duration_ms;
    refs.push_back({fold(w.word), w.end_ms, next});
  }
  std::vector<const TimedWord*> hyps;
  for (const auto& h : hypothesis)
    if (h.start_ms > exclude_ms) hyps.push_back(&h);

  TimestampScores s;
  s.reference_count = refs.size();
  s.hypothesis_count = hyps.size();
  double start_err = 0.0, end_err = 0.0;
  std::size_t end_pairs = 0;
  std::size_t next_ref = 0;
  for (const TimedWord* h : hyps) {
    const std::string word = fold(h->word);
    std::size_t j = next_ref;
    while (j < refs.size() && refs[j].word != word) ++j;
    if (j == refs.size()) continue;
    next_ref = j + 1;
    ++s.matched;
    const double err = std::fabs(static_cast<double>(h->start_ms - refs[j].end_ms));
    start_err += err;
    if (err <= threshold_ms) ++s.hits;
    if (refs[j].next_end_ms) {
      end_err += std::fabs(static_cast<double>(h->end_ms - *refs[j].next_end_ms));
      ++end_pairs;
    }
  }
  s.precision = hyps.empty() ? 0.0 : static_cast<double>(s.hits) / static_cast<double>(hyps.size());
  s.recall = refs.empty() ? 0.0 : static_cast<double>(s.hits) / static_cast<double>(refs.size());
  s.sd_ms = s.matched == 0 ? 0.0 : start_err / static_cast<double>(s.matched);
  s.ed_ms = end_pairs == 0 ? 0.0 : end_err / static_cast<double>(end_pairs);
  return s;
}

RuntimeSummary rtf_stats(const RuntimeStats& stats) {
  if (stats.chunk_seconds.size() != stats.audio_seconds.size())
    throw ShapeError("rtf_stats: chunk and audio duration lists differ in length");
  RuntimeSummary out;
  double latency = 0.0;
  for (std::size_t i = 0; i < stats.chunk_seconds.size(); ++i) {
    if (!(stats.audio_seconds[i] > 0.0)) throw DomainError("rtf_stats: chunk audio duration must be positive");
    if (stats.chunk_seconds[i] < 0.0) throw DomainError("rtf_stats: negative processing time");
    out.rtf.push_back(stats.chunk_seconds[i] / stats.audio_seconds[i]);
    latency += stats.chunk_seconds[i];
  }
  if (!out.rtf.empty()) {
    double sum = 0.0;
    for (double r : out.rtf) sum += r;
    out.mean_rtf = sum / static_cast<double>(out.rtf.size());
    out.mean_latency_s = latency / static_cast<double>(out.rtf.size());
  }
  return out;
}

}  // namespace chunkwise
