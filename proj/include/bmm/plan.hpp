#pragma once

#include <cstdint>

namespace bmm {

inline constexpr unsigned kWordBits = 64;

// The innermost unit everywhere is one 64x64 bit block: 64 words, one word
// per block row.
inline constexpr unsigned kBlockDim = 64;
inline constexpr unsigned kBlockWords = 64;
inline constexpr unsigned kBlockBits = kBlockDim * kBlockDim;

// How the recursion levels of an n x n product are assigned to execution
// layers. Every level splits each dimension in two (seven subproducts per
// level); below the last level sits one 64x64 block handled by the word
// kernel, so n = 64 * 2^(d_host + d_serial + d_parallel).
//
//   d_host:     levels run by the host work pipeline (one sub-instance
//               stream per emulated accelerator)
//   d_serial:   levels run as a depth-first recursion inside one engine call
//   d_parallel: levels run as whole-array expand/compress passes, split
//               across worker threads
//   d_inner:    always 1, the 64x64 block level
struct LayerPlan {
    int d_host = 0;
    int d_serial = 0;
    int d_parallel = 0;
    int d_inner = 1;
    int workers = 1;

    int depth() const { return d_host + d_serial + d_parallel; }

    std::uint64_t matrix_dim() const {
        return std::uint64_t{kBlockDim} << depth();
    }

    // Default split for an n x n product: up to three parallel levels, the
    // remainder serial. Host levels only on explicit request; they exist to
    // stream instances that exceed accelerator memory, which cannot happen
    // in-process.
    static LayerPlan auto_plan(std::uint64_t n, int workers);
};

} // namespace bmm
