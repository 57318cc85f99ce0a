#pragma once

#include <cstdint>

namespace chunkwise {

// Multiply-accumulate counts by attention stage plus extra cache memory.
struct OpCounter {
  std::uint64_t projection_macs = 0;
  std::uint64_t dot_product_macs = 0;
  std::uint64_t value_macs = 0;
  std::uint64_t other_macs = 0;  // feed-forward and output projections
  std::uint64_t cache_bytes = 0;

  std::uint64_t total_macs() const noexcept {
    return projection_macs + dot_product_macs + value_macs + other_macs;
  }
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

enum class OpStage { kProjection, kDotProduct, kValue, kOther };

// Counter receiving counts on this thread, or nullptr.
OpCounter* active_counter() noexcept;
void count_macs(OpStage stage, std::uint64_t macs) noexcept;
void count_cache_bytes(std::uint64_t bytes) noexcept;

// Installs a counter for the current thread for the lifetime of the scope.
class CountingScope {
 public:
  explicit CountingScope(OpCounter& counter) noexcept;
  ~CountingScope();
  CountingScope(const CountingScope&) = delete;
  CountingScope& operator=(const CountingScope&) = delete;

 private:
  OpCounter* previous_;
};

}  // namespace chunkwise
