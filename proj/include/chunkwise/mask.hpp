#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chunkwise/attention.hpp"

namespace chunkwise {

// One encoder frame covers this much audio.
inline constexpr int kFrameMs = 20;

// Chunking geometry of the blocked causal mask: `tau` frames per chunk after an
// initial chunk of `tau0` frames. Requires 1 <= tau <= tau0 and tau | tau0.
class MaskSpec {
 public:
  MaskSpec(std::size_t tau, std::size_t tau0);

  std::size_t tau() const noexcept { return tau_; }
  std::size_t tau0() const noexcept { return tau0_; }

  // Frames covered after `chunks` chunks (the first chunk is the initial one).
  std::size_t frames_after(std::size_t chunks) const noexcept {
    return chunks == 0 ? 0 : tau0_ + (chunks - 1) * tau_;
  }
  // True when `frames` ends exactly on a chunk boundary.
  bool is_boundary(std::size_t frames) const noexcept {
    return frames >= tau0_ && (frames - tau0_) % tau_ == 0;
  }

  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;

 private:
  std::size_t tau_;
  std::size_t tau0_;
};

// ceil(t / tau) for a 1-based frame index t.
std::size_t block_index(std::size_t t, const MaskSpec& spec);

// Mask predicate over 1-based frame indices: visible iff i's block is not earlier than
// j's block, or both frames lie in the initial [1, tau0] square.
bool is_attendable(std::size_t i, std::size_t j, const MaskSpec& spec);

// Square mask of side k * tau.
AttentionMask build_mask(std::size_t k, const MaskSpec& spec);

// Mask for query frames [row_begin, row_end) against key frames [0, col_end), 0-based
// storage indices. Used for streaming chunks against cached keys.
AttentionMask build_frame_mask(std::size_t row_begin, std::size_t row_end, std::size_t col_end,
                               const MaskSpec& spec);

struct SamplePointSet {
  std::vector<std::size_t> frames;  // strictly increasing chunk-boundary frame counts
  double fraction = 1.0;
};

// All chunk-boundary frame counts tau0, tau0 + tau, ... <= total_frames.
std::vector<std::size_t> chunk_boundaries(const MaskSpec& spec, std::size_t total_frames);

// Uniform subset of the chunk boundaries of size max(1, round_half_up(f_hat * |I|)),
// sorted ascending. Selection is a seeded partial Fisher-Yates over std::mt19937_64.
SamplePointSet sample_points(const MaskSpec& spec, std::size_t total_frames, double f_hat,
                             std::uint64_t rng_seed);

}  // namespace chunkwise
