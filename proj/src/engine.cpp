#include "bmm/engine.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

#include "bmm/pipeline.hpp"
#include "bmm/yates.hpp"
#include "parallel.hpp"

namespace bmm {

LayerPlan LayerPlan::auto_plan(std::uint64_t n, int workers) {
    if (n < kBlockDim || !std::has_single_bit(n))
        throw ShapeError("matrix dimension must be 64 * 2^k");
    const int k = std::countr_zero(n) - 6;
    LayerPlan plan;
    plan.d_parallel = std::min(3, k);
    plan.d_serial = k - plan.d_parallel;
    plan.workers = workers < 1 ? 1 : workers;
    return plan;
}

const Decomposition& decomposition_for(Algo algo) {
    switch (algo) {
        case Algo::StrassenWinograd: return builtin(Builtin::StrassenWinograd);
        case Algo::AltSelfInverse: return builtin(Builtin::AltSelfInverse);
        case Algo::AltChaining: return builtin(Builtin::AltChaining);
        case Algo::Cubic: break;
    }
    throw std::invalid_argument("the cubic algorithm has no bilinear scheme");
}

void kernel64(const std::uint64_t* a, const std::uint64_t* b_transposed,
              std::uint64_t* out, Semiring ring) {
    if (ring == Semiring::Gf2XorAnd) {
        for (unsigned i = 0; i < kBlockDim; ++i) {
            const std::uint64_t row = a[i];
            std::uint64_t bits = 0;
            for (unsigned k = 0; k < kBlockDim; ++k)
                bits |= static_cast<std::uint64_t>(
                            std::popcount(row & b_transposed[k]) & 1)
                        << k;
            out[i] = bits;
        }
    } else {
        for (unsigned i = 0; i < kBlockDim; ++i) {
            const std::uint64_t row = a[i];
            std::uint64_t bits = 0;
            for (unsigned k = 0; k < kBlockDim; ++k)
                bits |= static_cast<std::uint64_t>((row & b_transposed[k]) != 0)
                        << k;
            out[i] = bits;
        }
    }
}

namespace {

void cubic_blocked(const BitMatrix& a, const BitMatrix& b, BitMatrix& c,
                   Semiring ring, int workers, OpCounter* counter) {
    const std::uint64_t bi_n = a.rows / kBlockDim;
    const std::uint64_t bj_n = a.cols / kBlockDim;
    const std::uint64_t bk_n = b.cols / kBlockDim;
    BitMatrix bt = b;
    transpose_blocks64(bt);
    detail::parallel_ranges(
        bi_n * bk_n, workers, [&](std::uint64_t begin, std::uint64_t end) {
            std::uint64_t a_blk[kBlockWords], bt_blk[kBlockWords];
            std::uint64_t acc[kBlockWords], q[kBlockWords];
            for (std::uint64_t p = begin; p < end; ++p) {
                const std::uint64_t bi = p / bk_n;
                const std::uint64_t bk = p % bk_n;
                for (std::uint64_t bj = 0; bj < bj_n; ++bj) {
                    for (unsigned u = 0; u < kBlockDim; ++u) {
                        a_blk[u] = a.row(bi * kBlockDim + u)[bj];
                        bt_blk[u] = bt.row(bj * kBlockDim + u)[bk];
                    }
                    kernel64(a_blk, bt_blk, bj == 0 ? acc : q, ring);
                    if (bj == 0) continue;
                    if (ring == Semiring::Gf2XorAnd)
                        for (unsigned u = 0; u < kBlockWords; ++u) acc[u] ^= q[u];
                    else
                        for (unsigned u = 0; u < kBlockWords; ++u) acc[u] |= q[u];
                }
                for (unsigned u = 0; u < kBlockDim; ++u)
                    c.row(bi * kBlockDim + u)[bk] = acc[u];
            }
            if (counter) {
                const std::uint64_t pairs = end - begin;
                counter->add_kernels(pairs * bj_n);
                counter->add_ands(pairs * bj_n * kBlockBits);
                const std::uint64_t folds = pairs * (bj_n - 1) * kBlockWords;
                if (ring == Semiring::Gf2XorAnd)
                    counter->add_xors(folds);
                else
                    counter->add_ors(folds);
            }
        });
}

void cubic_rowwise(const BitMatrix& a, const BitMatrix& b, BitMatrix& c,
                   Semiring ring, int workers, OpCounter* counter) {
    const std::uint64_t wpr = c.words_per_row();
    detail::parallel_ranges(
        a.rows, workers, [&](std::uint64_t begin, std::uint64_t end) {
            std::uint64_t applied = 0;
            for (std::uint64_t i = begin; i < end; ++i) {
                const std::uint64_t* arow = a.row(i);
                std::uint64_t* crow = c.row(i);
                for (std::uint64_t j = 0; j < a.cols; ++j) {
                    if (!((arow[j >> 6] >> (j & 63)) & 1)) continue;
                    const std::uint64_t* brow = b.row(j);
                    if (ring == Semiring::Gf2XorAnd)
                        for (std::uint64_t w = 0; w < wpr; ++w) crow[w] ^= brow[w];
                    else
                        for (std::uint64_t w = 0; w < wpr; ++w) crow[w] |= brow[w];
                    ++applied;
                }
            }
            if (counter) {
                if (ring == Semiring::Gf2XorAnd)
                    counter->add_xors(applied * wpr);
                else
                    counter->add_ors(applied * wpr);
            }
        });
}

} // namespace

BitMatrix multiply_cubic(const BitMatrix& a, const BitMatrix& b, Semiring ring,
                         int workers, OpCounter* counter) {
    if (a.cols != b.rows) throw ShapeError("inner dimensions differ");
    if (workers < 1) workers = 1;
    BitMatrix c = BitMatrix::zeros(a.rows, b.cols);
    const bool blocked = a.rows % kBlockDim == 0 && a.cols % kBlockDim == 0 &&
                         b.cols % kBlockDim == 0;
    if (blocked)
        cubic_blocked(a, b, c, ring, workers, counter);
    else
        cubic_rowwise(a, b, c, ring, workers, counter);
    return c;
}

void basis_change(BitVectorTensor& v, const Decomposition& d, BasisFactor which,
                  int levels, int workers, OpCounter* counter) {
    const Gf2Matrix* m = nullptr;
    const StraightLineProgram* slp = nullptr;
    switch (which) {
        case BasisFactor::Phi: m = &d.phi, slp = &d.slp_phi; break;
        case BasisFactor::Psi: m = &d.psi, slp = &d.slp_psi; break;
        case BasisFactor::Chi: m = &d.chi, slp = &d.slp_chi; break;
    }
    if (levels < 0 ||
        v.mode_lengths.size() < static_cast<std::size_t>(levels) + 1)
        throw std::invalid_argument("vector has fewer modes than basis levels");
    for (int l = 0; l < levels; ++l)
        if (v.mode_lengths[l] != m->cols)
            throw std::invalid_argument("mode length does not match the basis");
    if (v.words.size() * kWordBits != v.bit_length())
        throw std::invalid_argument("vector storage does not match its modes");
    if (m->is_identity()) return;
    const std::uint64_t total_words = v.words.size();
    std::uint64_t outer = 1;
    for (int l = 0; l < levels; ++l) {
        const std::uint64_t inner = total_words / (outer * m->cols);
        yates::mode_step_in_place(*slp, v.words.data(), outer, inner, workers,
                                  counter);
        outer *= m->cols;
    }
}

namespace {

std::uint64_t pow7(int e) {
    std::uint64_t v = 1;
    while (e-- > 0) v *= 7;
    return v;
}

// Everything one multiply_alt call threads through its recursion.
struct AltContext {
    const Decomposition* d = nullptr;
    int d_serial = 0;
    int d_parallel = 0;
    int workers = 1;
    OpCounter* counter = nullptr;
    // words of one operand at serial level l; level_words[0] is the whole
    // vector, each level divides by 4
    std::vector<std::uint64_t> level_words;
    // per serial level: the 7 expanded left/right children and the 7 child
    // products, each child level_words[l + 1] long
    std::vector<std::vector<std::uint64_t>> t_buf, s_buf, q_buf;
    // parallel-layer passes over all but the innermost parallel level
    yates::KroneckerChain expand_left, expand_right, compress;
    std::vector<std::size_t> expand_order, compress_order;
};

// Innermost parallel level, fused: per position, expand 4+4 blocks to 7+7
// in local storage, run the 7 block products, compress back to 4 blocks.
void fused_block_stage(AltContext& ctx, const std::uint64_t* t_in,
                       const std::uint64_t* s_in, std::uint64_t* out,
                       std::uint64_t positions) {
    const Decomposition& d = *ctx.d;
    detail::parallel_ranges(
        positions, ctx.workers, [&](std::uint64_t begin, std::uint64_t end) {
            std::uint64_t t7[7 * kBlockWords];
            std::uint64_t s7[7 * kBlockWords];
            std::uint64_t q7[7 * kBlockWords];
            for (std::uint64_t p = begin; p < end; ++p) {
                const std::uint64_t off = p * 4 * kBlockWords;
                yates::mode_step(d.slp_alpha, t_in + off, t7, 1, kBlockWords, 1,
                                 ctx.counter);
                yates::mode_step(d.slp_beta, s_in + off, s7, 1, kBlockWords, 1,
                                 ctx.counter);
                for (unsigned h = 0; h < 7; ++h)
                    kernel64(t7 + h * kBlockWords, s7 + h * kBlockWords,
                             q7 + h * kBlockWords, Semiring::Gf2XorAnd);
                yates::mode_step(d.slp_gamma, q7, out + off, 1, kBlockWords, 1,
                                 ctx.counter);
            }
            if (ctx.counter) {
                ctx.counter->add_kernels((end - begin) * 7);
                ctx.counter->add_ands((end - begin) * 7 * kBlockBits);
            }
        });
}

// One sub-product at the bottom of the serial recursion: d_parallel levels
// as whole-array passes, then the block kernel.
void parallel_leaf(AltContext& ctx, const std::uint64_t* a,
                   const std::uint64_t* b, std::uint64_t* c) {
    const int dp = ctx.d_parallel;
    if (dp == 0) {
        kernel64(a, b, c, Semiring::Gf2XorAnd);
        if (ctx.counter) {
            ctx.counter->add_kernels(1);
            ctx.counter->add_ands(kBlockBits);
        }
        return;
    }
    if (dp == 1) {
        fused_block_stage(ctx, a, b, c, 1);
        return;
    }
    const std::uint64_t leaf_words = ctx.level_words[ctx.d_serial];
    std::vector<std::uint64_t> outer_modes(dp - 1, 4);
    outer_modes.push_back(4 * kBlockBits);

    BitVectorTensor tin;
    tin.mode_lengths = outer_modes;
    tin.words.assign(a, a + leaf_words);
    const BitVectorTensor t_hat =
        yates::apply(ctx.expand_left, tin, ctx.expand_order, ctx.workers,
                     ctx.counter);
    tin.words.assign(b, b + leaf_words);
    const BitVectorTensor s_hat =
        yates::apply(ctx.expand_right, tin, ctx.expand_order, ctx.workers,
                     ctx.counter);

    BitVectorTensor u;
    u.mode_lengths.assign(dp - 1, 7);
    u.mode_lengths.push_back(4 * kBlockBits);
    u.words.resize(pow7(dp - 1) * 4 * kBlockWords);
    fused_block_stage(ctx, t_hat.words.data(), s_hat.words.data(),
                      u.words.data(), pow7(dp - 1));

    const BitVectorTensor c_hat = yates::apply(
        ctx.compress, u, ctx.compress_order, ctx.workers, ctx.counter);
    std::copy(c_hat.words.begin(), c_hat.words.end(), c);
}

void alt_recurse(AltContext& ctx, const std::uint64_t* a,
                 const std::uint64_t* b, std::uint64_t* c, int level) {
    if (level == ctx.d_serial) {
        parallel_leaf(ctx, a, b, c);
        return;
    }
    const std::uint64_t sub = ctx.level_words[level + 1];
    std::uint64_t* t = ctx.t_buf[level].data();
    std::uint64_t* s = ctx.s_buf[level].data();
    std::uint64_t* q = ctx.q_buf[level].data();
    yates::mode_step(ctx.d->slp_alpha, a, t, 1, sub, ctx.workers, ctx.counter);
    yates::mode_step(ctx.d->slp_beta, b, s, 1, sub, ctx.workers, ctx.counter);
    for (unsigned h = 0; h < 7; ++h)
        alt_recurse(ctx, t + h * sub, s + h * sub, q + h * sub, level + 1);
    yates::mode_step(ctx.d->slp_gamma, q, c, 1, sub, ctx.workers, ctx.counter);
}

} // namespace

BitVectorTensor multiply_alt(const BitVectorTensor& a_hat,
                             const BitVectorTensor& b_hat,
                             const Decomposition& d, const LayerPlan& plan,
                             OpCounter* counter) {
    if (plan.d_serial < 0 || plan.d_parallel < 0 || plan.d_inner != 1 ||
        plan.workers < 1)
        throw std::invalid_argument("invalid layer plan");
    if (d.params != TripleParams{})
        throw std::invalid_argument("engine layers require <2,2,2>_7 schemes");
    const int depth = plan.d_serial + plan.d_parallel;
    std::vector<std::uint64_t> want(depth, 4);
    want.push_back(kBlockBits);
    if (a_hat.mode_lengths != want || b_hat.mode_lengths != want)
        throw std::invalid_argument("operands are not interleaved for this plan");
    if (a_hat.words.size() * kWordBits != a_hat.bit_length() ||
        b_hat.words.size() * kWordBits != b_hat.bit_length())
        throw std::invalid_argument("operand storage does not match its modes");

    AltContext ctx;
    ctx.d = &d;
    ctx.d_serial = plan.d_serial;
    ctx.d_parallel = plan.d_parallel;
    ctx.workers = plan.workers;
    ctx.counter = counter;
    ctx.level_words.resize(ctx.d_serial + 1);
    ctx.level_words[0] = a_hat.words.size();
    for (int l = 1; l <= ctx.d_serial; ++l)
        ctx.level_words[l] = ctx.level_words[l - 1] / 4;
    ctx.t_buf.resize(ctx.d_serial);
    ctx.s_buf.resize(ctx.d_serial);
    ctx.q_buf.resize(ctx.d_serial);
    for (int l = 0; l < ctx.d_serial; ++l) {
        ctx.t_buf[l].resize(7 * ctx.level_words[l + 1]);
        ctx.s_buf[l].resize(7 * ctx.level_words[l + 1]);
        ctx.q_buf[l].resize(7 * ctx.level_words[l + 1]);
    }
    if (ctx.d_parallel >= 2) {
        ctx.expand_left.trailing_identity = 4 * kBlockBits;
        ctx.expand_right.trailing_identity = 4 * kBlockBits;
        ctx.compress.trailing_identity = 4 * kBlockBits;
        for (int l = 0; l + 1 < ctx.d_parallel; ++l) {
            ctx.expand_left.factors.push_back({d.alpha, d.slp_alpha});
            ctx.expand_right.factors.push_back({d.beta, d.slp_beta});
            ctx.compress.factors.push_back({d.gamma, d.slp_gamma});
            ctx.expand_order.push_back(l);
        }
        ctx.compress_order.assign(ctx.expand_order.rbegin(),
                                  ctx.expand_order.rend());
    }

    BitVectorTensor result;
    result.mode_lengths = want;
    result.words.resize(a_hat.words.size());
    alt_recurse(ctx, a_hat.words.data(), b_hat.words.data(),
                result.words.data(), 0);
    return result;
}

BitMatrix multiply(const BitMatrix& a, const BitMatrix& b, Algo algo,
                   const LayerPlan& plan, Semiring ring, OpCounter* counter) {
    if (algo == Algo::Cubic)
        return multiply_cubic(a, b, ring, plan.workers, counter);
    if (ring == Semiring::BooleanOrAnd)
        throw std::invalid_argument(
            "the Boolean semiring has no subtraction, so cancellation-based "
            "fast algorithms are unsound over it; use the cubic algorithm");
    if (a.rows != a.cols || b.rows != b.cols || a.rows != b.rows)
        throw ShapeError("fast algorithms need equal square operands");
    if (a.rows < kBlockDim || !std::has_single_bit(a.rows))
        throw ShapeError("fast algorithms need n = 64 * 2^k");
    if (plan.matrix_dim() != a.rows || plan.d_host < 0 || plan.d_serial < 0 ||
        plan.d_parallel < 0 || plan.d_inner != 1 || plan.workers < 1)
        throw std::invalid_argument("layer plan does not match the operands");

    const Decomposition& d = decomposition_for(algo);
    const int depth = plan.depth();
    BitVectorTensor a_hat = to_interleaved(a, plan, Operand::Left);
    BitVectorTensor b_hat = to_interleaved(b, plan, Operand::Right);
    if (!d.phi.is_identity())
        basis_change(a_hat, d, BasisFactor::Phi, depth, plan.workers, counter);
    if (!d.psi.is_identity())
        basis_change(b_hat, d, BasisFactor::Psi, depth, plan.workers, counter);
    BitVectorTensor c_hat =
        plan.d_host > 0
            ? pipeline::coordinate(a_hat, b_hat, d, plan, plan.workers, counter)
            : multiply_alt(a_hat, b_hat, d, plan, counter);
    if (!d.chi.is_identity())
        basis_change(c_hat, d, BasisFactor::Chi, depth, plan.workers, counter);
    return from_interleaved(c_hat, plan, Operand::Result);
}

BitMatrix multiply_strassen_winograd(const BitMatrix& a, const BitMatrix& b,
                                     const LayerPlan& plan, Semiring ring,
                                     OpCounter* counter) {
    return multiply(a, b, Algo::StrassenWinograd, plan, ring, counter);
}

BitVectorTensor chain_multiply(const std::vector<BitVectorTensor>& matrices_hat,
                               const Decomposition& d, const LayerPlan& plan,
                               OpCounter* counter) {
    if (!d.traits.supports_chaining)
        throw std::invalid_argument(
            "this scheme cannot chain: its output basis is not its input basis");
    if (matrices_hat.size() < 2)
        throw std::invalid_argument("a chain needs at least two operands");
    BitVectorTensor acc =
        multiply_alt(matrices_hat[0], matrices_hat[1], d, plan, counter);
    for (std::size_t i = 2; i < matrices_hat.size(); ++i)
        acc = multiply_alt(acc, matrices_hat[i], d, plan, counter);
    return acc;
}

} // namespace bmm
