#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chunkwise/mask.hpp"
#include "chunkwise/model.hpp"
#include "chunkwise/op_counter.hpp"

namespace chunkwise {

// Query-key dot-product MACs of one encoder layer streaming T frames through the
// cache: tau0^2 d for the initial chunk plus tau * t * d for each later chunk ending
// at frame t. With tau0 = tau this is T^2 d / 2 + T tau d / 2.
std::uint64_t streaming_dot_product_macs(std::size_t frames, const MaskSpec& spec, std::size_t d);

struct StrategyCost {
  OpCounter ops;
  std::vector<double> seconds;  // one entry per trial
  double median_seconds() const;
};

struct BenchReport {
  std::size_t frames = 0;
  std::size_t d = 0;
  std::size_t layers = 0;
  MaskSpec spec{1, 1};
  StrategyCost cached;     // encoder KV-cache, one chunk at a time
  StrategyCost recompute;  // masked encoder over the whole prefix at every chunk
  StrategyCost padded;     // non-causal encoder over the zero-padded stream at every chunk
  std::uint64_t closed_form_dot_macs = 0;  // all layers
  std::uint64_t cache_floats = 0;          // K and V rows held at stream end, all layers
  double max_abs_diff = 0.0;               // cached vs recompute outputs
};

// Throws UsageError unless tau divides frames - tau0.
BenchReport run_bench(const ModelWeights& weights, const MaskSpec& spec, std::size_t frames, std::size_t trials,
                      std::uint64_t seed, bool include_padded = true);

}  // namespace chunkwise
