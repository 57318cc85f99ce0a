#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "chunkwise/finetune.hpp"
#include "chunkwise/metrics.hpp"
#include "chunkwise/model.hpp"

namespace chunkwise {

// Word list used for the toy vocabulary: ids 0/1 are the reserved markers.
std::vector<std::string> toy_vocabulary(std::size_t size);

struct SyntheticUtterance {
  AlignedUtterance utterance;
  ReferenceAlignment reference;
  std::string text;
};

struct SyntheticOptions {
  std::size_t d = 16;
  std::size_t vocab = 32;
  std::size_t frames_per_word = 50;  // 1 s per word
  std::size_t coda_frames = 2;       // distinctive frames closing each word
  std::size_t tail_frames = 0;       // trailing silence after the last word
  bool shared_body = false;  // one body pattern for every word: only the coda identifies it
  float body_gain = 1.0f;
  float coda_gain = 2.0f;
  float noise = 0.05f;
};

// Features built from per-token patterns: silence + noise, then the word's pattern,
// closed by a per-token coda so the word end is visible in the frames. Word i ends at
// (i + 1) * frames_per_word frames; `tail_frames` of noise follow the last word.
SyntheticUtterance make_word_utterance(const std::vector<TokenId>& words, const std::vector<std::string>& vocab,
                                       const SyntheticOptions& options, std::uint64_t seed,
                                       const std::string& id = "utt");

// Random-length utterances with random words, for corpus-level decoding checks.
std::vector<SyntheticUtterance> make_corpus(std::size_t count, const std::vector<std::string>& vocab,
                                            const SyntheticOptions& options, std::size_t min_words,
                                            std::size_t max_words, std::uint64_t seed);

}  // namespace chunkwise
