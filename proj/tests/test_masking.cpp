#include <doctest.h>

#include <algorithm>
#include <set>

#include "chunkwise/errors.hpp"
#include "chunkwise/mask.hpp"

using namespace chunkwise;

TEST_CASE("block index") {
  const MaskSpec s(15, 30);
  CHECK(block_index(35, s) == 3);
  CHECK(block_index(23, s) == 2);
  CHECK(block_index(50, s) == 4);
  CHECK(block_index(1, s) == 1);
  CHECK(block_index(15, s) == 1);
  CHECK(block_index(16, s) == 2);
  CHECK_THROWS_AS(block_index(0, s), DomainError);
}

TEST_CASE("attendability hand cases") {
  const MaskSpec s(15, 30);
  CHECK(is_attendable(35, 23, s));
  CHECK_FALSE(is_attendable(35, 50, s));
  CHECK(is_attendable(5, 29, s));
  CHECK_FALSE(is_attendable(5, 31, s));
  CHECK_THROWS_AS(is_attendable(0, 1, s), DomainError);
  CHECK_THROWS_AS(is_attendable(1, 0, s), DomainError);
}

TEST_CASE("mask spec validation") {
  CHECK_THROWS(MaskSpec(0, 4));
  CHECK_THROWS(MaskSpec(5, 4));
  CHECK_THROWS(MaskSpec(4, 6));
  CHECK_NOTHROW(MaskSpec(4, 4));
  CHECK_NOTHROW(MaskSpec(10, 30));
  const MaskSpec s(4, 8);
  CHECK(s.frames_after(0) == 0);
  CHECK(s.frames_after(1) == 8);
  CHECK(s.frames_after(3) == 16);
  CHECK(s.is_boundary(8));
  CHECK(s.is_boundary(12));
  CHECK_FALSE(s.is_boundary(10));
  CHECK_FALSE(s.is_boundary(4));
}

TEST_CASE("single chunk is fully visible") {
  const MaskSpec s(6, 6);
  const AttentionMask m = build_mask(1, s);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(m.attendable(i, j));
}

TEST_CASE("staircase shape") {
  const MaskSpec s(15, 30);
  const AttentionMask m = build_mask(10, s);
  REQUIRE(m.rows() == 150);
  for (std::size_t i = 1; i <= 150; ++i) {
    // Row i sees exactly up to the end of its block, or the whole initial square.
    const std::size_t visible = i <= 30 ? 30 : ((i + 14) / 15) * 15;
    CHECK(m.attendable_in_row(i - 1) == visible);
    for (std::size_t j = 1; j <= 150; ++j) CHECK(m.attendable(i - 1, j - 1) == (j <= visible));
  }
}

TEST_CASE("mask properties over random geometries") {
  for (std::size_t tau = 1; tau <= 5; ++tau) {
    for (std::size_t mult = 1; mult <= 3; ++mult) {
      const MaskSpec s(tau, tau * mult);
      for (std::size_t k = 1; k <= 6; ++k) {
        const AttentionMask m = build_mask(k, s);
        const std::size_t n = k * tau;
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 1; j <= n; ++j) {
            CHECK(m.attendable(i - 1, j - 1) == is_attendable(i, j, s));
            if (j <= i) CHECK(is_attendable(i, j, s));
          }
          // Rows inside one chunk are identical.
          for (std::size_t i2 = 1; i2 <= n; ++i2)
            if (block_index(i, s) == block_index(i2, s))
              for (std::size_t j = 1; j <= n; ++j) CHECK(is_attendable(i, j, s) == is_attendable(i2, j, s));
        }
        if (k > 1) {
          const AttentionMask prev = build_mask(k - 1, s);
          for (std::size_t i = 0; i < prev.rows(); ++i)
            for (std::size_t j = 0; j < prev.cols(); ++j) CHECK(prev.attendable(i, j) == m.attendable(i, j));
        }
      }
    }
  }
}

TEST_CASE("frame mask matches the square mask") {
  const MaskSpec s(3, 6);
  const AttentionMask full = build_mask(5, s);
  const AttentionMask part = build_frame_mask(9, 12, 12, s);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 12; ++c) CHECK(part.attendable(r, c) == full.attendable(9 + r, c));
}

TEST_CASE("chunk boundaries") {
  CHECK(chunk_boundaries(MaskSpec(5, 5), 20) == std::vector<std::size_t>{5, 10, 15, 20});
  CHECK(chunk_boundaries(MaskSpec(5, 10), 22) == std::vector<std::size_t>{10, 15, 20});
}

TEST_CASE("sample points") {
  const MaskSpec s(5, 5);
  CHECK(sample_points(s, 20, 1.0, 1).frames == std::vector<std::size_t>{5, 10, 15, 20});
  CHECK_THROWS_AS(sample_points(s, 4, 1.0, 1), InsufficientInputError);
  CHECK_THROWS_AS(sample_points(s, 20, 0.0, 1), DomainError);
  CHECK_THROWS_AS(sample_points(s, 20, 1.5, 1), DomainError);

  const auto all = chunk_boundaries(s, 50);
  REQUIRE(all.size() == 10);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = sample_points(s, 50, 0.5, seed);
    CHECK(p.frames.size() == 5);
    CHECK(std::is_sorted(p.frames.begin(), p.frames.end()));
    CHECK(std::adjacent_find(p.frames.begin(), p.frames.end()) == p.frames.end());
    for (auto f : p.frames) CHECK(std::find(all.begin(), all.end(), f) != all.end());
    CHECK(sample_points(s, 50, 0.5, seed).frames == p.frames);
  }
  // Tiny fraction still yields one point; half-way sizes round up.
  CHECK(sample_points(s, 50, 0.01, 3).frames.size() == 1);
  CHECK(sample_points(s, 15, 0.5, 3).frames.size() == 2);
}

TEST_CASE("sample point subsets vary with the seed") {
  const MaskSpec s(2, 2);
  std::set<std::vector<std::size_t>> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) seen.insert(sample_points(s, 40, 0.3, seed).frames);
  CHECK(seen.size() > 10);
}
