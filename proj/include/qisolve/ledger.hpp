#pragma once

#include <atomic>
#include <cstdint>

namespace qisolve {

struct LedgerCounts {
  std::uint64_t entry_queries = 0;
  std::uint64_t norm_queries = 0;
  std::uint64_t samples = 0;

  std::uint64_t total() const noexcept { return entry_queries + norm_queries + samples; }

  LedgerCounts& operator+=(const LedgerCounts& o) noexcept {
    entry_queries += o.entry_queries;
    norm_queries += o.norm_queries;
    samples += o.samples;
    return *this;
  }
  friend LedgerCounts operator+(LedgerCounts a, const LedgerCounts& b) noexcept { return a += b; }
  friend LedgerCounts operator-(LedgerCounts a, const LedgerCounts& b) noexcept {
    a.entry_queries -= b.entry_queries;
    a.norm_queries -= b.norm_queries;
    a.samples -= b.samples;
    return a;
  }
  bool operator==(const LedgerCounts&) const = default;
};

/// Counts accesses issued against one sampled data structure. Counters are relaxed
/// atomics so concurrent readers/samplers can share a structure.
class QueryLedger {
 public:
  QueryLedger() = default;
  QueryLedger(const QueryLedger& o) noexcept { *this = o; }
  QueryLedger& operator=(const QueryLedger& o) noexcept {
    auto c = o.snapshot();
    entry_.store(c.entry_queries, std::memory_order_relaxed);
    norm_.store(c.norm_queries, std::memory_order_relaxed);
    samples_.store(c.samples, std::memory_order_relaxed);
    return *this;
  }

  void count_entry() const noexcept { entry_.fetch_add(1, std::memory_order_relaxed); }
  void count_norm() const noexcept { norm_.fetch_add(1, std::memory_order_relaxed); }
  void count_sample() const noexcept { samples_.fetch_add(1, std::memory_order_relaxed); }

  LedgerCounts snapshot() const noexcept {
    return {entry_.load(std::memory_order_relaxed), norm_.load(std::memory_order_relaxed),
            samples_.load(std::memory_order_relaxed)};
  }

  void reset() noexcept {
    entry_.store(0, std::memory_order_relaxed);
    norm_.store(0, std::memory_order_relaxed);
    samples_.store(0, std::memory_order_relaxed);
  }

 private:
  mutable std::atomic<std::uint64_t> entry_{0};
  mutable std::atomic<std::uint64_t> norm_{0};
  mutable std::atomic<std::uint64_t> samples_{0};
};

}  // namespace qisolve
