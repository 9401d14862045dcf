#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmm/plan.hpp"

namespace bmm {

// File or stream contents do not form a valid BMM1 matrix.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Dimensions do not fit the requested operation.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Which role a matrix plays in a product C = A * B. The interleaved form
// orders the level digits by role, and the right operand's inner 64x64
// blocks are stored transposed so the kernel can read B columns as words.
enum class Operand { Left, Right, Result };

// Row-major packed bit matrix. Each row occupies words_per_row() consecutive
// 64-bit words; bit j of a row lives in word j/64 at bit position j%64 (LSB
// first). Bits past `cols` in the last word of a row are always zero; every
// operation preserves that.
struct BitMatrix {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<std::uint64_t> words;

    static BitMatrix zeros(std::uint64_t rows, std::uint64_t cols);

    // Deterministic uniform fill (about half the bits set) from a 64-bit
    // seed. Same seed, same matrix, on every platform.
    static BitMatrix random(std::uint64_t rows, std::uint64_t cols,
                            std::uint64_t seed);

    std::uint64_t words_per_row() const { return (cols + kWordBits - 1) / kWordBits; }

    const std::uint64_t* row(std::uint64_t i) const { return words.data() + i * words_per_row(); }
    std::uint64_t* row(std::uint64_t i) { return words.data() + i * words_per_row(); }

    bool get(std::uint64_t i, std::uint64_t j) const;
    void set(std::uint64_t i, std::uint64_t j, bool value);

    bool operator==(const BitMatrix&) const = default;
};

// Bit vector with a multi-mode shape, stored as packed words. The engine
// keeps matrices in this form: mode_lengths = depth() modes of length 4
// (one per recursion level) followed by one mode of length 4096 (the inner
// block). Total bit length is the product of the mode lengths.
struct BitVectorTensor {
    std::vector<std::uint64_t> mode_lengths;
    std::vector<std::uint64_t> words;

    std::uint64_t bit_length() const;

    bool operator==(const BitVectorTensor&) const = default;
};

// Transposes every aligned 64x64 block of m in place (block positions stay
// put, block contents transpose). Requires rows and cols to be multiples of
// 64. Applying it twice restores the original.
void transpose_blocks64(BitMatrix& m);

// Linear bit position of matrix entry (i, j) in the interleaved form of an
// operand with the given plan. Exposed so the address map itself can be
// checked exhaustively.
std::uint64_t interleaved_bit_index(const LayerPlan& plan, Operand which,
                                    std::uint64_t i, std::uint64_t j);

// Reorders an n x n matrix (n = plan.matrix_dim()) into the engine's
// interleaved form: level digits of row and column indices alternate, most
// significant first, ending with the 64x64 block. For Operand::Right each
// block is stored transposed. Inverse: from_interleaved.
BitVectorTensor to_interleaved(const BitMatrix& m, const LayerPlan& plan,
                               Operand which);
BitMatrix from_interleaved(const BitVectorTensor& t, const LayerPlan& plan,
                           Operand which);

// Embeds m into the smallest square power-of-two dimension that is at least
// 64 and covers both extents, zero-filled. Multiplication routines never pad
// on their own; callers opt in through this.
BitMatrix pad_pow2(const BitMatrix& m);

// BMM1 container: magic "BMM1", rows and cols as little-endian u64, then the
// packed rows exactly as BitMatrix holds them, words little-endian.
BitMatrix read_bmm1(const std::string& path);
void write_bmm1(const BitMatrix& m, const std::string& path);

} // namespace bmm
