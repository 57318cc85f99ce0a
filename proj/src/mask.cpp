#include "chunkwise/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "chunkwise/errors.hpp"

namespace chunkwise {

MaskSpec::MaskSpec(std::size_t tau, std::size_t tau0) : tau_(tau), tau0_(tau0) {
  if (tau == 0) throw DomainError("mask spec: tau must be >= 1");
  if (tau0 < tau) {
    throw DomainError("mask spec: tau0 (" + std::to_string(tau0) + ") must be >= tau (" +
                      std::to_string(tau) + ")");
  }
  if (tau0 % tau != 0) {
    throw DomainError("mask spec: tau0 (" + std::to_string(tau0) + ") must be a multiple of tau (" +
                      std::to_string(tau) + ")");
  }
}

std::size_t block_index(std::size_t t, const MaskSpec& spec) {
  if (t == 0) throw DomainError("block_index: frame indices are 1-based");
  return (t + spec.tau() - 1) / spec.tau();
}

bool is_attendable(std::size_t i, std::size_t j, const MaskSpec& spec) {
  if (i == 0 || j == 0) throw DomainError("is_attendable: frame indices are 1-based");
  if (i <= spec.tau0() && j <= spec.tau0()) return true;
  return block_index(i, spec) >= block_index(j, spec);
}

AttentionMask build_mask(std::size_t k, const MaskSpec& spec) {
  if (k == 0) throw DomainError("build_mask: k must be >= 1");
  const std::size_t n = k * spec.tau();
  return build_frame_mask(0, n, n, spec);
}

AttentionMask build_frame_mask(std::size_t row_begin, std::size_t row_end, std::size_t col_end,
                               const MaskSpec& spec) {
  if (row_begin > row_end) throw DomainError("build_frame_mask: row_begin > row_end");
  return AttentionMask::from_predicate(row_end - row_begin, col_end,
                                       [&](std::size_t r, std::size_t c) {
                                         return is_attendable(row_begin + r + 1, c + 1, spec);
                                       });
}

std::vector<std::size_t> chunk_boundaries(const MaskSpec& spec, std::size_t total_frames) {
  std::vector<std::size_t> out;
  for (std::size_t t = spec.tau0(); t <= total_frames; t += spec.tau()) out.push_back(t);
  return out;
}

SamplePointSet sample_points(const MaskSpec& spec, std::size_t total_frames, double f_hat,
                             std::uint64_t rng_seed) {
  if (!(f_hat > 0.0 && f_hat <= 1.0)) throw DomainError("sample_points: f_hat must be in (0, 1]");
  if (total_frames < spec.tau0()) {
    throw InsufficientInputError("sample_points: " + std::to_string(total_frames) +
                                 " frames is shorter than the initial chunk (" +
                                 std::to_string(spec.tau0()) + ")");
  }
  std::vector<std::size_t> grid = chunk_boundaries(spec, total_frames);
  const auto wanted = static_cast<std::size_t>(std::floor(f_hat * static_cast<double>(grid.size()) + 0.5));
  const std::size_t count = std::clamp<std::size_t>(wanted, 1, grid.size());

  std::mt19937_64 rng(rng_seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (grid.size() - i));
    std::swap(grid[i], grid[j]);
  }
  grid.resize(count);
  std::sort(grid.begin(), grid.end());
  return {std::move(grid), f_hat};
}

}  // namespace chunkwise
