#include "chunkwise/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "chunkwise/encoder.hpp"
#include "chunkwise/errors.hpp"

namespace chunkwise {

std::uint64_t streaming_dot_product_macs(std::size_t frames, const MaskSpec& spec, std::size_t d) {
  std::uint64_t total = static_cast<std::uint64_t>(spec.tau0()) * spec.tau0() * d;
  for (std::size_t t = spec.tau0() + spec.tau(); t <= frames; t += spec.tau())
    total += static_cast<std::uint64_t>(spec.tau()) * t * d;
  return total;
}

double StrategyCost::median_seconds() const {
  if (seconds.empty()) return 0.0;
  std::vector<double> s = seconds;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

namespace {

template <class Fn>
auto measure(StrategyCost& cost, Fn&& fn) {
  OpCounter ops;
  const auto started = std::chrono::steady_clock::now();
  decltype(fn()) out;
  {
    CountingScope scope(ops);
    out = fn();
  }
  cost.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  cost.ops = ops;
  return out;
}

}  // namespace

BenchReport run_bench(const ModelWeights& weights, const MaskSpec& spec, std::size_t frames, std::size_t trials,
                      std::uint64_t seed, bool include_padded) {
  if (frames < spec.tau0() || (frames - spec.tau0()) % spec.tau() != 0) {
    throw UsageError("bench: tau=" + std::to_string(spec.tau()) + " must divide T - tau0 = " +
                     std::to_string(frames) + " - " + std::to_string(spec.tau0()));
  }
  if (trials == 0) throw UsageError("bench: trials must be >= 1");
  const std::size_t d = weights.config.d;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  Matrix x(frames, d);
  for (float& v : x.data()) v = dist(rng);

  BenchReport r;
  r.frames = frames;
  r.d = d;
  r.layers = weights.config.layers_enc;
  r.spec = spec;
  r.closed_form_dot_macs = streaming_dot_product_macs(frames, spec, d) * r.layers;
  r.cache_floats = static_cast<std::uint64_t>(2 * frames * d * r.layers);

  const auto boundaries = chunk_boundaries(spec, frames);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Matrix cached = measure(r.cached, [&] { return encode_chunked(weights, x, spec); });
    const Matrix last = measure(r.recompute, [&] {
      Matrix out;
      for (std::size_t t : boundaries) out = encode_full_masked(weights, x.slice_rows(0, t), spec);
      return out;
    });
    if (trial == 0) {
      for (std::size_t i = 0; i < cached.data().size(); ++i)
        r.max_abs_diff = std::max(r.max_abs_diff, static_cast<double>(std::fabs(cached.data()[i] - last.data()[i])));
    }
    if (include_padded) {
      measure(r.padded, [&] {
        Matrix out;
        for (std::size_t t : boundaries) {
          Matrix padded(frames, d, 0.0f);
          for (std::size_t row = 0; row < t; ++row) std::copy_n(x.row(row).begin(), d, padded.row(row).begin());
          out = encode_noncausal(weights, padded);
        }
        return out;
      });
    }
  }
  return r;
}

}  // namespace chunkwise
