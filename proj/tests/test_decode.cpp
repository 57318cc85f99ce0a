#include <doctest.h>

#include <cmath>
#include <map>

#include "chunkwise/decode.hpp"
#include "chunkwise/errors.hpp"

using namespace chunkwise;

namespace {

std::vector<float> logs(std::vector<float> p) {
  for (float& x : p) x = std::log(x);
  return p;
}

// Table-driven scorer: (chunk, prefix) -> probabilities, with a fallback.
struct Script {
  std::shared_ptr<std::size_t> chunk = std::make_shared<std::size_t>(1);
  std::map<std::pair<std::size_t, std::vector<TokenId>>, std::vector<float>> table;
  std::vector<float> fallback;

  std::unique_ptr<ChunkScorer> scorer() const {
    auto t = table;
    auto f = fallback;
    return std::make_unique<FunctionScorer>(
        [t, f](std::size_t k, std::span<const TokenId> prefix) {
          auto it = t.find({k, std::vector<TokenId>(prefix.begin(), prefix.end())});
          return logs(it == t.end() ? f : it->second);
        },
        chunk);
  }
};

}  // namespace

TEST_CASE("topk") {
  const std::vector<float> p{0.1f, 0.5f, 0.4f};
  CHECK(topk(p, 1) == std::vector<std::size_t>{1});
  CHECK(topk(p, 3).size() == 3);
  CHECK(topk(std::vector<float>{0.3f, 0.3f, 0.2f}, 1) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(topk(p, 0), DomainError);
  CHECK_THROWS_AS(topk(p, 4), DomainError);
}

TEST_CASE("greedy stability") {
  const std::vector<float> cur{0.41f, 0.59f};
  CHECK(is_stable_greedy(0.40, cur, 0));
  CHECK(is_stable_greedy(0.60, std::vector<float>{0.3f, 0.2f, 0.5f}, 2) == true);
  CHECK(is_stable_greedy(0.60, std::vector<float>{0.3f, 0.2f, 0.5f}, 0) == false);
  CHECK(is_stable_greedy(0.60, std::vector<float>{0.3f, 0.1f, 0.3f, 0.3f}, 0));  // tie goes to the lower index
}

TEST_CASE("beam stability") {
  const std::vector<float> p{0.05f, 0.3f, 0.02f, 0.2f, 0.1f, 0.15f, 0.18f};
  for (TokenId t = 0; t < 7; ++t) CHECK(is_stable_beam(p, t, 7));
  CHECK(is_stable_beam(p, 1, 1));
  CHECK_FALSE(is_stable_beam(p, 3, 1));
  CHECK(is_stable_beam(p, 5, 5));   // rank 4
  CHECK(is_stable_beam(p, 4, 5));   // rank 5
  CHECK_FALSE(is_stable_beam(p, 0, 5));  // rank 6
}

TEST_CASE("window start counts a trailing EOT on top of the last n tokens") {
  Hypothesis h;
  for (TokenId t : {3, 4, 5, 0}) h.records.push_back({t, 1, -0.1f, std::nullopt});
  CHECK(check_window_start(h, 2) == 1);
  CHECK(check_window_start(h, 0) == 3);
  CHECK(check_window_start(h, 9) == 0);
  h.records.pop_back();
  CHECK(check_window_start(h, 2) == 1);
}

TEST_CASE("quiescent chunk leaves the hypothesis unchanged") {
  Script s;
  s.fallback = {0.1f, 0.1f, 0.8f, 0.0f + 1e-6f};
  s.table[{1, {}}] = {0.1f, 0.1f, 0.7f, 0.1f};
  s.table[{1, {2}}] = {0.9f, 0.02f, 0.04f, 0.04f};
  s.table[{2, {}}] = {0.1f, 0.1f, 0.7f, 0.1f};
  s.table[{2, {2}}] = {0.9f, 0.02f, 0.04f, 0.04f};
  GreedyStreamDecoder dec(s.scorer(), DecodeOptions{});
  dec.step(1, 100);
  const auto first = dec.hypothesis().tokens();
  CHECK(first == std::vector<TokenId>{2, 0});
  *s.chunk = 2;
  const auto ev = dec.step(2, 200);
  CHECK(dec.hypothesis().tokens() == first);
  CHECK(ev.tokens == std::vector<TokenId>{2});
  CHECK(dec.last_regression_offset() == 0);
  CHECK(dec.finish() == std::vector<TokenId>{2});
  CHECK_THROWS_AS(dec.step(3, 300), StateError);
}

TEST_CASE("unstable token is retracted with everything after it") {
  Script s;
  s.fallback = {0.97f, 0.01f, 0.01f, 0.01f};
  s.table[{1, {}}] = {0.1f, 0.0f + 0.01f, 0.6f, 0.29f};
  s.table[{1, {2}}] = {0.1f, 0.01f, 0.09f, 0.8f};
  s.table[{1, {2, 3}}] = {0.9f, 0.01f, 0.04f, 0.05f};
  // Chunk 2: token 3 after 2 loses probability and is no longer argmax.
  s.table[{2, {}}] = {0.1f, 0.01f, 0.6f, 0.29f};
  s.table[{2, {2}}] = {0.1f, 0.01f, 0.5f, 0.39f};
  s.table[{2, {2, 2}}] = {0.9f, 0.01f, 0.04f, 0.05f};
  GreedyStreamDecoder dec(s.scorer(), DecodeOptions{});
  dec.step(1, 100);
  CHECK(dec.hypothesis().tokens() == std::vector<TokenId>{2, 3, 0});
  *s.chunk = 2;
  dec.step(2, 200);
  CHECK(dec.hypothesis().tokens() == std::vector<TokenId>{2, 2, 0});
  CHECK(dec.last_regression_offset() == 1);
  CHECK(dec.hypothesis().records[1].emit_chunk == 2);
  CHECK(dec.hypothesis().records[0].emit_chunk == 1);
  // Path equals the sum of refreshed per-token log-probs.
  double sum = 0.0;
  for (const auto& r : dec.hypothesis().records) sum += r.logprob;
  CHECK(dec.hypothesis().logprob_path == doctest::Approx(sum));
}

TEST_CASE("EOT pauses rather than ends the stream") {
  Script s;
  s.fallback = {0.9f, 0.02f, 0.04f, 0.04f};
  s.table[{2, {}}] = {0.2f, 0.0f + 0.01f, 0.7f, 0.09f};
  GreedyStreamDecoder dec(s.scorer(), DecodeOptions{});
  dec.step(1, 100);
  CHECK(dec.hypothesis().tokens() == std::vector<TokenId>{0});
  CHECK(dec.word_timestamps(100).empty());
  *s.chunk = 2;
  dec.step(2, 200);
  CHECK(dec.hypothesis().tokens() == std::vector<TokenId>{2, 0});
  const auto ts = dec.word_timestamps(300);
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].start_ms == 200);
  CHECK(ts[0].end_ms == 300);
}

TEST_CASE("plain greedy keeps stale tokens") {
  Script s;
  s.fallback = {0.97f, 0.01f, 0.01f, 0.01f};
  s.table[{1, {}}] = {0.1f, 0.01f, 0.6f, 0.29f};
  s.table[{2, {}}] = {0.1f, 0.01f, 0.29f, 0.6f};
  GreedyStreamDecoder plain(s.scorer(), DecodeOptions{}, false);
  GreedyStreamDecoder cw(s.scorer(), DecodeOptions{});
  plain.step(1, 100);
  cw.step(1, 100);
  *s.chunk = 2;
  plain.step(2, 200);
  cw.step(2, 200);
  CHECK(plain.hypothesis().tokens() == std::vector<TokenId>{2, 0});
  CHECK(cw.hypothesis().tokens() == std::vector<TokenId>{3, 0});
}

TEST_CASE("timestamps chain and follow regressions") {
  Script s;
  s.fallback = {0.9f, 0.02f, 0.04f, 0.04f};
  s.table[{2, {}}] = {0.1f, 0.01f, 0.8f, 0.09f};
  s.table[{3, {}}] = {0.1f, 0.01f, 0.8f, 0.09f};
  s.table[{3, {2}}] = {0.1f, 0.01f, 0.09f, 0.8f};
  GreedyStreamDecoder dec(s.scorer(), DecodeOptions{});
  for (std::size_t k = 1; k <= 4; ++k) {
    *s.chunk = k;
    dec.step(k, static_cast<std::int64_t>(k) * 100);
  }
  // Chunk 4 falls back: token 2 is no longer argmax and its probability dropped.
  CHECK(dec.hypothesis().tokens() == std::vector<TokenId>{0});
  *s.chunk = 3;
  GreedyStreamDecoder dec2(s.scorer(), DecodeOptions{});
  *s.chunk = 2;
  dec2.step(2, 200);
  *s.chunk = 3;
  dec2.step(3, 300);
  const auto ts = dec2.word_timestamps(400);
  REQUIRE(ts.size() == 2);
  CHECK(ts[0].start_ms == 200);
  CHECK(ts[0].end_ms == 300);
  CHECK(ts[1].start_ms == 300);
  CHECK(ts[1].end_ms == 400);
}

TEST_CASE("beam prefers the better total path") {
  // Greedy takes 2 (0.55) then a weak continuation; beam finds 3 -> strong EOT.
  Script s;
  s.fallback = {0.97f, 0.01f, 0.01f, 0.01f};
  s.table[{1, {}}] = {0.01f, 0.01f, 0.55f, 0.43f};
  s.table[{1, {2}}] = {0.3f, 0.01f, 0.35f, 0.34f};
  s.table[{1, {2, 2}}] = {0.3f, 0.01f, 0.35f, 0.34f};
  s.table[{1, {2, 2, 2}}] = {0.9f, 0.01f, 0.05f, 0.04f};
  s.table[{1, {3}}] = {0.97f, 0.01f, 0.01f, 0.01f};
  DecodeOptions o;
  o.beam = 2;
  BeamStreamDecoder beam(s.scorer(), o);
  GreedyStreamDecoder greedy(s.scorer(), o);
  beam.step(1, 100);
  greedy.step(1, 100);
  CHECK(greedy.finish() == std::vector<TokenId>{2, 2, 2});
  CHECK(beam.finish() == std::vector<TokenId>{3});
  CHECK(beam.best().logprob_path > greedy.hypothesis().logprob_path);
  CHECK(beam.size() <= 2);
  for (std::size_t i = 1; i < beam.size(); ++i)
    CHECK(beam.hypothesis(i - 1).logprob_path >= beam.hypothesis(i).logprob_path);
}

TEST_CASE("beam of one follows greedy on a scripted stream") {
  Script s;
  s.fallback = {0.4f, 0.1f, 0.3f, 0.2f};
  s.table[{1, {}}] = {0.2f, 0.1f, 0.5f, 0.2f};
  s.table[{2, {2}}] = {0.2f, 0.1f, 0.2f, 0.5f};
  s.table[{3, {}}] = {0.2f, 0.1f, 0.2f, 0.5f};
  DecodeOptions o;
  o.beam = 1;
  BeamStreamDecoder beam(s.scorer(), o);
  GreedyStreamDecoder greedy(s.scorer(), o);
  for (std::size_t k = 1; k <= 4; ++k) {
    *s.chunk = k;
    const auto a = beam.step(k, 0), b = greedy.step(k, 0);
    CHECK(a.tokens == b.tokens);
  }
}

TEST_CASE("max token guard") {
  Script s;
  s.fallback = {0.1f, 0.1f, 0.8f};
  DecodeOptions o;
  o.max_tokens = 5;
  GreedyStreamDecoder dec(s.scorer(), o);
  dec.step(1, 0);
  CHECK(dec.hypothesis().records.size() == 5);
  o.beam = 1;
  BeamStreamDecoder beam(s.scorer(), o);
  beam.step(1, 0);
  CHECK(beam.best().records.size() == 5);
  // A wider beam keeps the EOT candidate, which pauses expansion at once.
  o.beam = 3;
  BeamStreamDecoder wide(s.scorer(), o);
  wide.step(1, 0);
  CHECK(wide.best().tokens() == std::vector<TokenId>{2});
}

TEST_CASE("sequence log-prob sums the conditionals") {
  Script s;
  s.fallback = {0.5f, 0.25f, 0.25f};
  auto sc = s.scorer();
  CHECK(sequence_logprob(*sc, std::vector<TokenId>{2, 0}) == doctest::Approx(std::log(0.25) + std::log(0.5)));
}

TEST_CASE("a token that gains probability but loses the argmax splits greedy from a beam of one") {
  Script s;
  s.fallback = {0.9f, 0.02f, 0.04f, 0.04f};
  s.table[{1, {}}] = {0.1f, 0.05f, 0.45f, 0.4f};
  s.table[{2, {}}] = {0.01f, 0.01f, 0.46f, 0.52f};
  DecodeOptions o;
  o.beam = 1;
  GreedyStreamDecoder greedy(s.scorer(), o);
  BeamStreamDecoder beam(s.scorer(), o);
  greedy.step(1, 0);
  beam.step(1, 0);
  CHECK(greedy.hypothesis().tokens() == beam.best().tokens());
  *s.chunk = 2;
  greedy.step(2, 0);
  beam.step(2, 0);
  CHECK(greedy.hypothesis().tokens() == std::vector<TokenId>{2, 0});
  CHECK(beam.best().tokens() == std::vector<TokenId>{3, 0});
}
