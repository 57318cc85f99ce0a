#include "chunkwise/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chunkwise/errors.hpp"

namespace chunkwise {

std::vector<std::size_t> topk(std::span<const float> scores, std::size_t k) {
  if (k == 0 || k > scores.size()) {
    throw DomainError("topk: k=" + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

namespace {

std::size_t argmax(std::span<const float> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_token(std::span<const float> dist, TokenId token) {
  if (token < 0 || static_cast<std::size_t>(token) >= dist.size())
    throw DomainError("token id " + std::to_string(token) + " outside the distribution");
}

}  // namespace

bool is_stable_greedy(double prev_prob, std::span<const float> cur_dist, TokenId token) {
  check_token(cur_dist, token);
  const auto t = static_cast<std::size_t>(token);
  return static_cast<double>(cur_dist[t]) >= prev_prob || argmax(cur_dist) == t;
}

bool is_stable_beam(std::span<const float> cur_dist, TokenId token, std::size_t b) {
  check_token(cur_dist, token);
  const auto top = topk(cur_dist, std::min(b, cur_dist.size()));
  return std::find(top.begin(), top.end(), static_cast<std::size_t>(token)) != top.end();
}

ModelScorer::ModelScorer(const ModelWeights& weights, DecoderSession session)
    : weights_(&weights), session_(std::move(session)) {}

std::vector<float> ModelScorer::next_log_probs(std::span<const TokenId> prefix) {
  buffer_.assign(1, kBeginOfTranscript);
  buffer_.insert(buffer_.end(), prefix.begin(), prefix.end());
  return decoder_step(session_, *weights_, buffer_);
}

std::unique_ptr<ChunkScorer> ModelScorer::clone() const { return std::make_unique<ModelScorer>(*this); }

FunctionScorer::FunctionScorer(Fn fn, std::shared_ptr<const std::size_t> chunk)
    : fn_(std::make_shared<const Fn>(std::move(fn))), chunk_(std::move(chunk)) {}

std::vector<float> FunctionScorer::next_log_probs(std::span<const TokenId> prefix) { return (*fn_)(*chunk_, prefix); }

std::unique_ptr<ChunkScorer> FunctionScorer::clone() const { return std::make_unique<FunctionScorer>(*this); }

double sequence_logprob(ChunkScorer& scorer, std::span<const TokenId> tokens) {
  double total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    total += scorer.next_log_probs(tokens.first(i))[static_cast<std::size_t>(tokens[i])];
  return total;
}

// ---- hypotheses --------------------------------------------------------------------

std::vector<TokenId> Hypothesis::tokens() const {
  std::vector<TokenId> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.token);
  return out;
}

std::vector<TokenId> Hypothesis::transcript() const {
  std::vector<TokenId> out = tokens();
  if (!out.empty() && out.back() == kEndOfTranscript) out.pop_back();
  return out;
}

void Hypothesis::recompute_path() {
  logprob_path = 0.0;
  for (const auto& r : records) logprob_path += r.logprob;
}

void Hypothesis::truncate(std::size_t length) {
  if (length < records.size()) records.resize(length);
  recompute_path();
}

std::size_t check_window_start(const Hypothesis& hyp, std::size_t window) {
  std::size_t end = hyp.records.size();
  if (hyp.finished()) --end;
  return end - std::min(window, end);
}

namespace {

std::vector<TokenId> committed_prefix(const Hypothesis& hyp, std::size_t window) {
  const auto tokens = hyp.tokens();
  return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(check_window_start(hyp, window))};
}

std::vector<TokenId> prefix_tokens(const Hypothesis& hyp, std::size_t length) {
  std::vector<TokenId> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) out.push_back(hyp.records[i].token);
  return out;
}

template <class StablePredicate>
std::size_t regress(Hypothesis& hyp, ChunkScorer& scorer, std::size_t window, StablePredicate&& stable) {
  const std::size_t end = hyp.records.size();
  for (std::size_t idx = check_window_start(hyp, window); idx < end; ++idx) {
    const auto dist = scorer.next_log_probs(prefix_tokens(hyp, idx));
    TokenRecord& rec = hyp.records[idx];
    if (!stable(rec, dist)) {
      hyp.truncate(idx);
      return end - 1 - idx;
    }
    rec.logprob = dist[static_cast<std::size_t>(rec.token)];
  }
  hyp.recompute_path();
  return 0;
}

}  // namespace

// ---- greedy ------------------------------------------------------------------------

GreedyStreamDecoder::GreedyStreamDecoder(std::unique_ptr<ChunkScorer> scorer, DecodeOptions options,
                                         bool regression)
    : scorer_(std::move(scorer)), options_(options), regression_(regression) {}

TimelineEvent GreedyStreamDecoder::step(std::size_t chunk, std::int64_t time_ms) {
  if (ended_) throw StateError("greedy decoder: step after the stream ended");
  last_offset_ = 0;
  if (regression_) {
    last_offset_ = regress(hyp_, *scorer_, options_.window, [](const TokenRecord& rec, std::span<const float> dist) {
      std::vector<float> probs(dist.size());
      for (std::size_t i = 0; i < dist.size(); ++i) probs[i] = std::exp(dist[i]);
      return is_stable_greedy(static_cast<double>(std::exp(rec.logprob)), probs, rec.token);
    });
  } else if (hyp_.finished()) {
    hyp_.truncate(hyp_.records.size() - 1);
  }

  while (!hyp_.finished() && hyp_.records.size() < options_.max_tokens) {
    const auto dist = scorer_->next_log_probs(hyp_.tokens());
    const auto best = static_cast<TokenId>(argmax(dist));
    TokenRecord rec{best, chunk, dist[static_cast<std::size_t>(best)], std::nullopt};
    if (best != kEndOfTranscript) {
      // Timestamps live per position and survive truncation; a deeper regression
      // re-decodes positions under their earlier times.
      const std::size_t i = hyp_.records.size();
      if (position_ts_.size() <= i) position_ts_.resize(i + 1);
      if (last_offset_ == 0) position_ts_[i] = time_ms;
      rec.timestamp_ms = position_ts_[i];
    }
    hyp_.records.push_back(rec);
    hyp_.logprob_path += rec.logprob;
  }
  return {chunk, time_ms, committed_prefix(hyp_, options_.window), hyp_.transcript(), 0.0};
}

std::vector<TokenId> GreedyStreamDecoder::finish() {
  ended_ = true;
  return hyp_.transcript();
}

std::vector<WordTimestamp> GreedyStreamDecoder::word_timestamps(std::int64_t stream_end_ms) const {
  std::vector<WordTimestamp> out;
  for (std::size_t i = 0; i < hyp_.records.size(); ++i) {
    const auto& r = hyp_.records[i];
    if (r.token == kEndOfTranscript || !r.timestamp_ms) continue;
    if (!out.empty()) out.back().end_ms = *r.timestamp_ms;
    out.push_back({i, r.token, *r.timestamp_ms, stream_end_ms});
  }
  return out;
}

// ---- beam --------------------------------------------------------------------------

BeamStreamDecoder::BeamStreamDecoder(std::unique_ptr<ChunkScorer> scorer, DecodeOptions options)
    : options_(options) {
  if (options_.beam == 0) throw DomainError("beam decoder: beam size must be >= 1");
  beam_.push_back({Hypothesis{}, std::move(scorer)});
}

TimelineEvent BeamStreamDecoder::step(std::size_t chunk, std::int64_t time_ms) {
  if (ended_) throw StateError("beam decoder: step after the stream ended");
  const std::size_t b = options_.beam;

  for (auto& e : beam_) {
    regress(e.hyp, *e.scorer, options_.window, [b](const TokenRecord& rec, std::span<const float> dist) {
      return is_stable_beam(dist, rec.token, b);
    });
  }
  // Regression can collapse distinct hypotheses onto the same tokens; keep the first.
  std::vector<Entry> unique;
  for (auto& e : beam_) {
    const auto toks = e.hyp.tokens();
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const Entry& u) { return u.hyp.tokens() == toks; });
    if (!seen) unique.push_back(std::move(e));
  }
  beam_ = std::move(unique);
  std::stable_sort(beam_.begin(), beam_.end(),
                   [](const Entry& x, const Entry& y) { return x.hyp.logprob_path > y.hyp.logprob_path; });

  auto any_finished = [&] {
    return std::any_of(beam_.begin(), beam_.end(), [](const Entry& e) { return e.hyp.finished(); });
  };
  while (!any_finished()) {
    struct Candidate {
      std::size_t parent;
      TokenId token;
      float logprob;
      double path;
    };
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < beam_.size(); ++p) {
      if (beam_[p].hyp.records.size() >= options_.max_tokens) continue;
      const auto dist = beam_[p].scorer->next_log_probs(beam_[p].hyp.tokens());
      for (std::size_t t : topk(dist, std::min(b, dist.size())))
        candidates.push_back({p, static_cast<TokenId>(t), dist[t], beam_[p].hyp.logprob_path + dist[t]});
    }
    if (candidates.empty()) break;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& x, const Candidate& y) { return x.path > y.path; });
    if (candidates.size() > b) candidates.resize(b);
    std::vector<Entry> next;
    for (const auto& c : candidates) {
      Entry e{beam_[c.parent].hyp, beam_[c.parent].scorer->clone()};
      e.hyp.records.push_back({c.token, chunk, c.logprob, std::nullopt});
      e.hyp.logprob_path = c.path;
      next.push_back(std::move(e));
    }
    beam_ = std::move(next);
  }
  return {chunk, time_ms, committed_prefix(beam_.front().hyp, options_.window), beam_.front().hyp.transcript(),
          0.0};
}

std::vector<TokenId> BeamStreamDecoder::finish() {
  ended_ = true;
  return beam_.front().hyp.transcript();
}

}  // namespace chunkwise
