#include "chunkwise/synthetic.hpp"

#include <random>

#include "chunkwise/errors.hpp"
#include "chunkwise/mask.hpp"

namespace chunkwise {

namespace {

constexpr const char* kWords[] = {
    "alpha",   "bravo",  "charlie", "delta", "echo",     "foxtrot", "golf",    "hotel",
    "india",   "juliet", "kilo",    "lima",  "mike",     "november", "oscar",  "papa",
    "quebec",  "romeo",  "sierra",  "tango", "uniform",  "victor",  "whiskey", "xray",
    "yankee",  "zulu",   "amber",   "basil", "cedar",    "dune",    "ember",   "fern"};

float uniform(std::mt19937& rng) { return static_cast<float>(rng() >> 8) * 0x1p-24f * 2.0f - 1.0f; }

// Deterministic per-token pattern: sign vector scaled to unit RMS, optionally shifted
// by `salt` to give the coda its own pattern.
std::vector<float> token_pattern(TokenId token, std::size_t d, std::uint32_t salt) {
  std::mt19937 rng(static_cast<std::uint32_t>(token) * 7919u + salt);
  std::vector<float> p(d);
  for (float& x : p) x = (rng() & 1u) ? 1.0f : -1.0f;
  return p;
}

}  // namespace

std::vector<std::string> toy_vocabulary(std::size_t size) {
  std::vector<std::string> v{"<eot>", "<sot>"};
  for (std::size_t i = 2; i < size; ++i) {
    const std::size_t w = i - 2;
    const std::size_t n = std::size(kWords);
    v.push_back(w < n ? std::string(kWords[w]) : std::string(kWords[w % n]) + std::to_string(w / n));
  }
  v.resize(size);
  return v;
}

SyntheticUtterance make_word_utterance(const std::vector<TokenId>& words, const std::vector<std::string>& vocab,
                                       const SyntheticOptions& o, std::uint64_t seed, const std::string& id) {
  if (o.coda_frames + 10 > o.frames_per_word) throw DomainError("synthetic: word slots too short");
  const std::size_t frames = words.size() * o.frames_per_word + o.tail_frames;
  SyntheticUtterance s;
  s.utterance.id = id;
  s.utterance.features = Matrix(frames, o.d);
  std::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  for (float& x : s.utterance.features.data()) x = o.noise * uniform(rng);
  for (std::size_t w = 0; w < words.size(); ++w) {
    const TokenId t = words[w];
    if (t < kFirstWordToken || static_cast<std::size_t>(t) >= vocab.size())
      throw DomainError("synthetic: word token outside the vocabulary");
    const auto body = token_pattern(o.shared_body ? kFirstWordToken : t, o.d, o.shared_body ? 3u : 1u);
    const auto coda = token_pattern(t, o.d, 2u);
    const std::size_t end = (w + 1) * o.frames_per_word;
    const std::size_t begin = w * o.frames_per_word + o.frames_per_word / 5;
    for (std::size_t f = begin; f < end; ++f) {
      const bool is_coda = f + o.coda_frames >= end;
      const auto& p = is_coda ? coda : body;
      for (std::size_t c = 0; c < o.d; ++c) s.utterance.features(f, c) += (is_coda ? o.coda_gain : o.body_gain) * p[c];
    }
    const std::int64_t end_ms = static_cast<std::int64_t>(end) * kFrameMs;
    s.utterance.tokens.push_back({t, end_ms});
    s.reference.words.push_back({vocab[static_cast<std::size_t>(t)], end_ms});
    if (!s.text.empty()) s.text += ' ';
    s.text += vocab[static_cast<std::size_t>(t)];
  }
  s.reference.duration_ms = static_cast<std::int64_t>(frames) * kFrameMs;
  return s;
}

std::vector<SyntheticUtterance> make_corpus(std::size_t count, const std::vector<std::string>& vocab,
                                            const SyntheticOptions& options, std::size_t min_words,
                                            std::size_t max_words, std::uint64_t seed) {
  if (min_words == 0 || min_words > max_words) throw DomainError("synthetic corpus: bad word-count range");
  if (vocab.size() <= static_cast<std::size_t>(kFirstWordToken)) throw DomainError("synthetic corpus: no words");
  std::mt19937_64 rng(seed);
  std::vector<SyntheticUtterance> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = min_words + rng() % (max_words - min_words + 1);
    std::vector<TokenId> words;
    for (std::size_t w = 0; w < n; ++w)
      words.push_back(static_cast<TokenId>(kFirstWordToken + rng() % (vocab.size() - kFirstWordToken)));
    out.push_back(make_word_utterance(words, vocab, options, rng(), "utt" + std::to_string(i)));
  }
  return out;
}

}  // namespace chunkwise
