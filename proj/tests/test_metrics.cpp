#include <doctest.h>

#include <random>

#include "chunkwise/errors.hpp"
#include "chunkwise/metrics.hpp"
#include "oracles.hpp"

using namespace chunkwise;

namespace {

std::vector<std::string> words(const char* text) { return tokenize_words(text); }

std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t max_len) {
  static const char* pool[] = {"a", "b", "c", "d"};
  std::vector<std::string> out(rng() % (max_len + 1));
  for (auto& w : out) w = pool[rng() % 4];
  return out;
}

}  // namespace

TEST_CASE("tokenization folds case and strips punctuation") {
  CHECK(tokenize_words("Hello, World!  it's  \"fine\".") == std::vector<std::string>{"hello", "world", "it's", "fine"});
  CHECK(tokenize_words(" -- ").empty());
}

TEST_CASE("edit counts") {
  CHECK(edit_counts(words("a b c"), words("a b c")) == EditCounts{0, 0, 0, 3});
  CHECK(edit_counts(words("a b c"), words("a x c")) == EditCounts{0, 0, 1, 2});
  CHECK(edit_counts(words("a b"), words("a b c")) == EditCounts{1, 0, 0, 2});
  CHECK(edit_counts(words(""), words("a b")) == EditCounts{2, 0, 0, 0});
  CHECK(edit_counts(words("a b"), words("")) == EditCounts{0, 2, 0, 0});
  // Substitution preferred over an insertion/deletion pair.
  CHECK(edit_counts(words("a b"), words("b c")) == EditCounts{0, 0, 2, 0});
}

TEST_CASE("edit counts length identities and oracle agreement") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto r = random_words(rng, 6), h = random_words(rng, 6);
    const EditCounts c = edit_counts(r, h);
    CHECK(c.reference_length() == r.size());
    CHECK(c.hypothesis_length() == h.size());
    if (trial < 300) CHECK(c == oracle::brute_force_counts(r, h));
  }
}

TEST_CASE("wer") {
  CHECK(wer(words("a b c"), words("a b c")) == 0.0);
  CHECK(wer(words("a b c"), words("a x c")) == doctest::Approx(1.0 / 3));
  CHECK(wer(words("a"), words("")) == 1.0);
  CHECK_THROWS_AS(wer(words(""), words("a")), DomainError);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = random_words(rng, 6);
    if (r.empty()) continue;
    auto h = r;
    if (!h.empty()) h.erase(h.begin() + static_cast<long>(rng() % h.size()));
    CHECK(wer(r, h) <= 1.0);
  }
}

TEST_CASE("rwer") {
  const auto ref = words("a b c");
  CHECK(rwer(ref, std::vector<HypothesisEvent>{{0, words("a")}, {0, words("a b")}, {0, words("a b c")}}) == 0.0);
  CHECK(rwer(ref, std::vector<HypothesisEvent>{{0, words("a x")}}) == doctest::Approx(0.5));
  CHECK(rwer(words("a b"), std::vector<HypothesisEvent>{{0, words("a")}, {0, words("a x")}}) ==
        doctest::Approx(1.0 / 3));
  // Over-generation is capped at the reference and counted as insertions.
  const auto c = rwer_counts(words("a b"), std::vector<HypothesisEvent>{{0, words("a b c d")}});
  CHECK(c == EditCounts{2, 0, 0, 2});
}

TEST_CASE("rwer of a single final event equals wer on the prefix") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = random_words(rng, 6), h = random_words(rng, 6);
    if (r.empty() || h.empty()) continue;
    const std::size_t n = std::min(r.size(), h.size());
    const std::vector<std::string> prefix(r.begin(), r.begin() + static_cast<long>(n));
    CHECK(rwer(r, std::vector<HypothesisEvent>{{0, h}}) == doctest::Approx(wer(prefix, h)));
  }
}

TEST_CASE("arwer") {
  ReferenceAlignment ref{{{"a", 100}, {"b", 200}, {"c", 300}}, 300};
  CHECK(arwer(ref, std::vector<HypothesisEvent>{{100, words("a")}, {200, words("a b")}, {300, words("a b c")}}) ==
        0.0);
  CHECK(arwer_counts(ref, std::vector<HypothesisEvent>{{200, {}}}) == EditCounts{0, 2, 0, 0});

  // A perfect transcript that always lags by one chunk.
  const std::vector<HypothesisEvent> late{{100, {}}, {200, words("a")}, {300, words("a b")}};
  CHECK(rwer(ref.word_list(), late) == 0.0);
  CHECK(arwer(ref, late) > 0.0);
  CHECK(arwer(ref, late) > rwer(ref.word_list(), late));
}

TEST_CASE("streaming metrics agree with the brute-force oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    ReferenceAlignment ref;
    std::int64_t t = 0;
    for (const auto& w : random_words(rng, 5)) ref.words.push_back({w, t += 100 * static_cast<std::int64_t>(rng() % 3)});
    std::vector<HypothesisEvent> events;
    for (std::size_t k = 0; k < 1 + rng() % 4; ++k)
      events.push_back({static_cast<std::int64_t>(k * 100), random_words(rng, 5)});
    CHECK(rwer_counts(ref.word_list(), events) == oracle::brute_rwer_counts(ref.word_list(), events));
    CHECK(arwer_counts(ref, events) == oracle::brute_arwer_counts(ref, events));
  }
}

TEST_CASE("timestamp metrics") {
  ReferenceAlignment ref{{{"one", 1000}, {"two", 2000}, {"three", 3000}}, 3500};
  SUBCASE("perfect") {
    const std::vector<TimedWord> hyp{{"one", 1000, 2000}, {"two", 2000, 3000}, {"three", 3000, 3500}};
    const auto s = timestamp_metrics(ref, hyp, 240);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.sd_ms == 0.0);
    CHECK(s.ed_ms == 0.0);
  }
  SUBCASE("all just outside the threshold") {
    const std::vector<TimedWord> hyp{{"one", 1241, 2241}, {"two", 2241, 3241}, {"three", 3241, 3741}};
    const auto s = timestamp_metrics(ref, hyp, 240);
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.matched == 3);
  }
  SUBCASE("two of three") {
    const std::vector<TimedWord> hyp{{"ONE", 1040, 2080}, {"two", 2080, 3500}};
    const auto s = timestamp_metrics(ref, hyp, 240);
    CHECK(s.recall == doctest::Approx(2.0 / 3));
    CHECK(s.precision == 1.0);
    CHECK(s.sd_ms == doctest::Approx(60.0));
  }
  SUBCASE("early words are excluded") {
    ReferenceAlignment r2{{{"x", 500}, {"one", 1000}}, 1500};
    const std::vector<TimedWord> hyp{{"x", 600, 1000}, {"one", 1000, 1500}};
    const auto s = timestamp_metrics(r2, hyp, 240);
    CHECK(s.reference_count == 1);
    CHECK(s.hypothesis_count == 1);
    CHECK(s.precision == 1.0);
  }
  SUBCASE("threshold must be positive") {
    CHECK_THROWS_AS(timestamp_metrics(ref, std::vector<TimedWord>{}, 0), DomainError);
  }
}

TEST_CASE("runtime stats") {
  CHECK(rtf_stats({{0.15}, {0.3}}).mean_rtf == doctest::Approx(0.5));
  CHECK(rtf_stats({{0.0, 0.0}, {0.2, 0.2}}).mean_rtf == 0.0);
  const auto r = rtf_stats({{0.1, 0.3}, {0.2, 0.2}});
  CHECK(r.mean_rtf == doctest::Approx(1.0));
  CHECK(r.mean_latency_s == doctest::Approx(0.2));
  CHECK(r.rtf.size() == 2);
  CHECK_THROWS_AS(rtf_stats({{0.1}, {0.0}}), DomainError);
  CHECK_THROWS_AS(rtf_stats({{0.1}, {}}), ShapeError);
}
