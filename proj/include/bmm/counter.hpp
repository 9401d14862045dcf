#pragma once

#include <atomic>
#include <cstdint>

namespace bmm {

// Monotone operation tallies. Word counts are exact and deterministic for a
// given call; worker threads accumulate locally and fold in once per pass,
// so totals do not depend on scheduling. Kernel invocations count 64x64
// block products.
struct OpCounter {
    std::atomic<std::uint64_t> word_ands{0};
    std::atomic<std::uint64_t> word_xors{0};
    std::atomic<std::uint64_t> word_ors{0};
    std::atomic<std::uint64_t> kernel_invocations{0};

    void reset() {
        word_ands = 0;
        word_xors = 0;
        word_ors = 0;
        kernel_invocations = 0;
    }

    void add_xors(std::uint64_t n) {
        word_xors.fetch_add(n, std::memory_order_relaxed);
    }
    void add_ands(std::uint64_t n) {
        word_ands.fetch_add(n, std::memory_order_relaxed);
    }
    void add_ors(std::uint64_t n) {
        word_ors.fetch_add(n, std::memory_order_relaxed);
    }
    void add_kernels(std::uint64_t n) {
        kernel_invocations.fetch_add(n, std::memory_order_relaxed);
    }
};

} // namespace bmm
