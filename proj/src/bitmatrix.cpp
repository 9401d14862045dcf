#include "bmm/bitmatrix.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>

namespace bmm {

namespace {

// In-place transpose of one 64x64 bit block (one word per row, column j at
// bit j). Recursive block swap: at width w, exchange the upper-right and
// lower-left w x w sub-blocks, then recurse into halves.
void transpose64(std::uint64_t* x) {
    static constexpr std::array<std::uint64_t, 6> masks = {
        0x00000000FFFFFFFFull, 0x0000FFFF0000FFFFull, 0x00FF00FF00FF00FFull,
        0x0F0F0F0F0F0F0F0Full, 0x3333333333333333ull, 0x5555555555555555ull,
    };
    unsigned w = 32;
    for (std::uint64_t m : masks) {
        for (unsigned k = 0; k < 64; ++k) {
            if (k & w) continue;
            std::uint64_t t = ((x[k] >> w) ^ x[k | w]) & m;
            x[k] ^= t << w;
            x[k | w] ^= t;
        }
        w >>= 1;
    }
}

// Interleaves the level digits of a block coordinate pair, row digit ahead
// of column digit at every level, most significant level first.
std::uint64_t morton2(std::uint64_t row_blk, std::uint64_t col_blk, int levels) {
    std::uint64_t out = 0;
    for (int l = 0; l < levels; ++l) {
        out |= ((row_blk >> l) & 1u) << (2 * l + 1);
        out |= ((col_blk >> l) & 1u) << (2 * l);
    }
    return out;
}

std::uint64_t load_le64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void store_le64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

} // namespace

BitMatrix BitMatrix::zeros(std::uint64_t rows, std::uint64_t cols) {
    BitMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.words.assign(rows * ((cols + kWordBits - 1) / kWordBits), 0);
    return m;
}

BitMatrix BitMatrix::random(std::uint64_t rows, std::uint64_t cols,
                            std::uint64_t seed) {
    BitMatrix m = zeros(rows, cols);
    std::mt19937_64 gen(seed);
    const std::uint64_t wpr = m.words_per_row();
    const unsigned tail = cols % kWordBits;
    const std::uint64_t tail_mask = tail ? (std::uint64_t{1} << tail) - 1 : ~std::uint64_t{0};
    for (std::uint64_t i = 0; i < rows; ++i) {
        std::uint64_t* r = m.row(i);
        for (std::uint64_t w = 0; w < wpr; ++w) r[w] = gen();
        r[wpr - 1] &= tail_mask;
    }
    return m;
}

bool BitMatrix::get(std::uint64_t i, std::uint64_t j) const {
    if (i >= rows || j >= cols) throw ShapeError("bit index out of range");
    return (row(i)[j / kWordBits] >> (j % kWordBits)) & 1u;
}

void BitMatrix::set(std::uint64_t i, std::uint64_t j, bool value) {
    if (i >= rows || j >= cols) throw ShapeError("bit index out of range");
    std::uint64_t& w = row(i)[j / kWordBits];
    const std::uint64_t bit = std::uint64_t{1} << (j % kWordBits);
    w = value ? (w | bit) : (w & ~bit);
}

std::uint64_t BitVectorTensor::bit_length() const {
    std::uint64_t n = 1;
    for (std::uint64_t m : mode_lengths) n *= m;
    return n;
}

void transpose_blocks64(BitMatrix& m) {
    if (m.rows % kBlockDim || m.cols % kBlockDim)
        throw ShapeError("block transpose needs dimensions divisible by 64");
    const std::uint64_t wpr = m.words_per_row();
    std::array<std::uint64_t, kBlockWords> blk;
    for (std::uint64_t bi = 0; bi < m.rows / kBlockDim; ++bi) {
        for (std::uint64_t bj = 0; bj < wpr; ++bj) {
            std::uint64_t* base = m.words.data() + bi * kBlockDim * wpr + bj;
            for (unsigned r = 0; r < kBlockDim; ++r) blk[r] = base[r * wpr];
            transpose64(blk.data());
            for (unsigned r = 0; r < kBlockDim; ++r) base[r * wpr] = blk[r];
        }
    }
}

std::uint64_t interleaved_bit_index(const LayerPlan& plan, Operand which,
                                    std::uint64_t i, std::uint64_t j) {
    const std::uint64_t n = plan.matrix_dim();
    if (i >= n || j >= n) throw ShapeError("bit index out of range");
    const std::uint64_t block = morton2(i / kBlockDim, j / kBlockDim, plan.depth());
    const std::uint64_t r = i % kBlockDim;
    const std::uint64_t c = j % kBlockDim;
    const std::uint64_t inner =
        which == Operand::Right ? c * kBlockDim + r : r * kBlockDim + c;
    return block * kBlockBits + inner;
}

BitVectorTensor to_interleaved(const BitMatrix& m, const LayerPlan& plan,
                               Operand which) {
    const std::uint64_t n = plan.matrix_dim();
    if (m.rows != n || m.cols != n)
        throw ShapeError("matrix does not match plan dimension");
    BitVectorTensor t;
    t.mode_lengths.assign(plan.depth(), 4);
    t.mode_lengths.push_back(kBlockBits);
    t.words.resize(n * n / kWordBits);
    const std::uint64_t wpr = m.words_per_row();
    std::array<std::uint64_t, kBlockWords> blk;
    for (std::uint64_t bi = 0; bi < n / kBlockDim; ++bi) {
        for (std::uint64_t bj = 0; bj < n / kBlockDim; ++bj) {
            const std::uint64_t* src = m.words.data() + bi * kBlockDim * wpr + bj;
            for (unsigned r = 0; r < kBlockDim; ++r) blk[r] = src[r * wpr];
            if (which == Operand::Right) transpose64(blk.data());
            std::uint64_t* dst =
                t.words.data() + morton2(bi, bj, plan.depth()) * kBlockWords;
            std::memcpy(dst, blk.data(), sizeof(blk));
        }
    }
    return t;
}

BitMatrix from_interleaved(const BitVectorTensor& t, const LayerPlan& plan,
                           Operand which) {
    const std::uint64_t n = plan.matrix_dim();
    const std::size_t depth = static_cast<std::size_t>(plan.depth());
    if (t.mode_lengths.size() != depth + 1 ||
        t.mode_lengths.back() != kBlockBits ||
        t.words.size() != n * n / kWordBits)
        throw ShapeError("tensor does not match plan shape");
    for (std::size_t l = 0; l < depth; ++l)
        if (t.mode_lengths[l] != 4)
            throw ShapeError("tensor does not match plan shape");
    BitMatrix m = BitMatrix::zeros(n, n);
    const std::uint64_t wpr = m.words_per_row();
    std::array<std::uint64_t, kBlockWords> blk;
    for (std::uint64_t bi = 0; bi < n / kBlockDim; ++bi) {
        for (std::uint64_t bj = 0; bj < n / kBlockDim; ++bj) {
            const std::uint64_t* src =
                t.words.data() + morton2(bi, bj, plan.depth()) * kBlockWords;
            std::memcpy(blk.data(), src, sizeof(blk));
            if (which == Operand::Right) transpose64(blk.data());
            std::uint64_t* dst = m.words.data() + bi * kBlockDim * wpr + bj;
            for (unsigned r = 0; r < kBlockDim; ++r) dst[r * wpr] = blk[r];
        }
    }
    return m;
}

BitMatrix pad_pow2(const BitMatrix& m) {
    const std::uint64_t extent = std::max(m.rows, m.cols);
    const std::uint64_t target =
        std::max<std::uint64_t>(kBlockDim, std::bit_ceil(extent));
    if (m.rows == target && m.cols == target) return m;
    BitMatrix out = BitMatrix::zeros(target, target);
    const std::uint64_t src_wpr = m.words_per_row();
    for (std::uint64_t i = 0; i < m.rows; ++i)
        std::memcpy(out.row(i), m.row(i), src_wpr * sizeof(std::uint64_t));
    return out;
}

BitMatrix read_bmm1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    unsigned char header[20];
    if (!in.read(reinterpret_cast<char*>(header), sizeof(header)))
        throw FormatError(path + ": truncated header");
    if (std::memcmp(header, "BMM1", 4) != 0)
        throw FormatError(path + ": bad magic");
    const std::uint64_t rows = load_le64(header + 4);
    const std::uint64_t cols = load_le64(header + 12);
    if (rows == 0 || cols == 0 || rows > (1u << 30) || cols > (1u << 30))
        throw FormatError(path + ": unreasonable dimensions");
    BitMatrix m = BitMatrix::zeros(rows, cols);
    std::vector<unsigned char> payload(m.words.size() * 8);
    if (!in.read(reinterpret_cast<char*>(payload.data()),
                 static_cast<std::streamsize>(payload.size())))
        throw FormatError(path + ": truncated payload");
    if (in.peek() != std::ifstream::traits_type::eof())
        throw FormatError(path + ": trailing bytes");
    for (std::size_t w = 0; w < m.words.size(); ++w)
        m.words[w] = load_le64(payload.data() + 8 * w);
    const unsigned tail = cols % kWordBits;
    if (tail) {
        const std::uint64_t pad_mask = ~((std::uint64_t{1} << tail) - 1);
        const std::uint64_t wpr = m.words_per_row();
        for (std::uint64_t i = 0; i < rows; ++i)
            if (m.row(i)[wpr - 1] & pad_mask)
                throw FormatError(path + ": nonzero padding bits");
    }
    return m;
}

void write_bmm1(const BitMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    unsigned char header[20];
    std::memcpy(header, "BMM1", 4);
    store_le64(header + 4, m.rows);
    store_le64(header + 12, m.cols);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<unsigned char> payload(m.words.size() * 8);
    for (std::size_t w = 0; w < m.words.size(); ++w)
        store_le64(payload.data() + 8 * w, m.words[w]);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw FormatError("write failed for " + path);
}

} // namespace bmm
