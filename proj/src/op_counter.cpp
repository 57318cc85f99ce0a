#include "chunkwise/op_counter.hpp"

namespace chunkwise {
namespace {
thread_local OpCounter* tls_counter = nullptr;
}

OpCounter* active_counter() noexcept { return tls_counter; }

void count_macs(OpStage stage, std::uint64_t macs) noexcept {
  if (tls_counter == nullptr) return;
  switch (stage) {
    case OpStage::kProjection: tls_counter->projection_macs += macs; break;
    case OpStage::kDotProduct: tls_counter->dot_product_macs += macs; break;
    case OpStage::kValue: tls_counter->value_macs += macs; break;
    case OpStage::kOther: tls_counter->other_macs += macs; break;
  }
}

void count_cache_bytes(std::uint64_t bytes) noexcept {
  if (tls_counter != nullptr) tls_counter->cache_bytes += bytes;
}

CountingScope::CountingScope(OpCounter& counter) noexcept : previous_(tls_counter) {
  tls_counter = &counter;
}
CountingScope::~CountingScope() { tls_counter = previous_; }

}  // namespace chunkwise
