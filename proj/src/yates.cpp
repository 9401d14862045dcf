#include "bmm/yates.hpp"

#include <algorithm>
#include <stdexcept>

#include "parallel.hpp"

namespace bmm::yates {

namespace {

constexpr int kMaxRegs = 32;

void validate_factor(const KroneckerFactor& f) {
    if (f.slp.input_arity != static_cast<int>(f.matrix.cols) ||
        f.slp.output_arity != static_cast<int>(f.matrix.rows))
        throw std::invalid_argument("factor program does not match its matrix");
    if (f.slp.register_count > kMaxRegs)
        throw std::invalid_argument("factor program uses too many registers");
}

void validate_chain_and_order(const KroneckerChain& chain,
                              const std::vector<std::size_t>& order) {
    if (chain.trailing_identity == 0 || chain.trailing_identity % kWordBits)
        throw std::invalid_argument("trailing identity must be a positive multiple of 64");
    for (const KroneckerFactor& f : chain.factors) validate_factor(f);
    if (order.size() != chain.factors.size())
        throw std::invalid_argument("order length does not match chain");
    std::vector<bool> seen(order.size(), false);
    for (std::size_t f : order) {
        if (f >= order.size() || seen[f])
            throw std::invalid_argument("order is not a permutation");
        seen[f] = true;
    }
}

// Evaluates the program once with register i bound to base[i * stride].
inline void run_slp_strided(const StraightLineProgram& slp,
                            const std::uint64_t* in, std::uint64_t in_stride,
                            std::uint64_t* out, std::uint64_t out_stride) {
    std::uint64_t regs[kMaxRegs];
    for (int q = 0; q < slp.input_arity; ++q) regs[q] = in[q * in_stride];
    for (const SlpStep& s : slp.steps) {
        if (s.op == SlpStep::Op::Copy)
            regs[s.target] = regs[s.source];
        else
            regs[s.target] ^= regs[s.source];
    }
    for (int h = 0; h < slp.output_arity; ++h)
        out[h * out_stride] = regs[slp.outputs[h]];
}

// One fused pass over two factors acting on distinct modes. `first` is
// applied before `second`, exactly as two separate passes would, so the
// addition count per position is a_second*P_first + b_first*P_second.
struct FusedDims {
    std::uint64_t outer, mid, inner;
    std::uint64_t ax, bx, ay, by;
    bool first_is_x;
};

void fused_pair_step(const StraightLineProgram& slp_first,
                     const StraightLineProgram& slp_second,
                     const FusedDims& dim, const std::uint64_t* in,
                     std::uint64_t* out, int workers, OpCounter* counter) {
    const std::uint64_t tile_y = std::max(dim.ay, dim.by);
    const std::uint64_t total = dim.outer * dim.mid * dim.inner;
    const std::uint64_t adds_per_pos =
        (dim.first_is_x ? dim.ay * slp_first.addition_count() +
                              dim.bx * slp_second.addition_count()
                        : dim.ax * slp_first.addition_count() +
                              dim.by * slp_second.addition_count());
    detail::parallel_ranges(total, workers, [&](std::uint64_t begin, std::uint64_t end) {
        std::uint64_t tile[8 * 8];
        for (std::uint64_t p = begin; p < end; ++p) {
            const std::uint64_t t = p % dim.inner;
            const std::uint64_t om = p / dim.inner;
            const std::uint64_t m = om % dim.mid;
            const std::uint64_t o = om / dim.mid;
            const std::uint64_t* src =
                in + ((o * dim.ax * dim.mid + m) * dim.ay) * dim.inner + t;
            for (std::uint64_t qx = 0; qx < dim.ax; ++qx)
                for (std::uint64_t qy = 0; qy < dim.ay; ++qy)
                    tile[qx * tile_y + qy] =
                        src[(qx * dim.mid * dim.ay + qy) * dim.inner];
            if (dim.first_is_x) {
                for (std::uint64_t qy = 0; qy < dim.ay; ++qy)
                    run_slp_strided(slp_first, tile + qy, tile_y, tile + qy, tile_y);
                for (std::uint64_t hx = 0; hx < dim.bx; ++hx)
                    run_slp_strided(slp_second, tile + hx * tile_y, 1,
                                    tile + hx * tile_y, 1);
            } else {
                for (std::uint64_t qx = 0; qx < dim.ax; ++qx)
                    run_slp_strided(slp_first, tile + qx * tile_y, 1,
                                    tile + qx * tile_y, 1);
                for (std::uint64_t hy = 0; hy < dim.by; ++hy)
                    run_slp_strided(slp_second, tile + hy, tile_y, tile + hy, tile_y);
            }
            std::uint64_t* dst =
                out + ((o * dim.bx * dim.mid + m) * dim.by) * dim.inner + t;
            for (std::uint64_t hx = 0; hx < dim.bx; ++hx)
                for (std::uint64_t hy = 0; hy < dim.by; ++hy)
                    dst[(hx * dim.mid * dim.by + hy) * dim.inner] =
                        tile[hx * tile_y + hy];
        }
        if (counter) counter->add_xors((end - begin) * adds_per_pos);
    });
}

} // namespace

void mode_step(const StraightLineProgram& slp, const std::uint64_t* in,
               std::uint64_t* out, std::uint64_t outer,
               std::uint64_t inner_words, int workers, OpCounter* counter) {
    if (slp.register_count > kMaxRegs)
        throw std::invalid_argument("program uses too many registers");
    const std::uint64_t a = static_cast<std::uint64_t>(slp.input_arity);
    const std::uint64_t b = static_cast<std::uint64_t>(slp.output_arity);
    const std::uint64_t total = outer * inner_words;
    detail::parallel_ranges(total, workers, [&](std::uint64_t begin, std::uint64_t end) {
        std::uint64_t o = begin / inner_words;
        std::uint64_t t = begin % inner_words;
        std::uint64_t p = begin;
        while (p < end) {
            const std::uint64_t run = std::min(inner_words - t, end - p);
            const std::uint64_t* src = in + o * a * inner_words + t;
            std::uint64_t* dst = out + o * b * inner_words + t;
            for (std::uint64_t k = 0; k < run; ++k)
                run_slp_strided(slp, src + k, inner_words, dst + k, inner_words);
            p += run;
            t += run;
            if (t == inner_words) {
                t = 0;
                ++o;
            }
        }
        if (counter)
            counter->add_xors((end - begin) *
                              static_cast<std::uint64_t>(slp.addition_count()));
    });
}

void mode_step_in_place(const StraightLineProgram& slp, std::uint64_t* data,
                        std::uint64_t outer, std::uint64_t inner_words,
                        int workers, OpCounter* counter) {
    if (!slp.in_place())
        throw std::invalid_argument("in-place pass needs an in-place program");
    const std::uint64_t arity = static_cast<std::uint64_t>(slp.input_arity);
    const std::uint64_t total = outer * inner_words;
    detail::parallel_ranges(total, workers, [&](std::uint64_t begin, std::uint64_t end) {
        std::uint64_t o = begin / inner_words;
        std::uint64_t t = begin % inner_words;
        std::uint64_t p = begin;
        while (p < end) {
            const std::uint64_t run = std::min(inner_words - t, end - p);
            std::uint64_t* grp = data + o * arity * inner_words + t;
            for (std::uint64_t k = 0; k < run; ++k)
                for (const SlpStep& s : slp.steps)
                    grp[s.target * inner_words + k] ^=
                        grp[s.source * inner_words + k];
            p += run;
            t += run;
            if (t == inner_words) {
                t = 0;
                ++o;
            }
        }
        if (counter)
            counter->add_xors((end - begin) *
                              static_cast<std::uint64_t>(slp.addition_count()));
    });
}

std::uint64_t cost(const KroneckerChain& chain,
                   const std::vector<std::size_t>& order) {
    validate_chain_and_order(chain, order);
    const std::uint64_t tw = chain.trailing_identity / kWordBits;
    std::vector<std::uint64_t> cur;
    for (const KroneckerFactor& f : chain.factors) cur.push_back(f.matrix.cols);
    std::uint64_t total = 0;
    for (std::size_t f : order) {
        std::uint64_t unit = tw;
        for (std::size_t k = 0; k < cur.size(); ++k)
            if (k != f) unit *= cur[k];
        total += unit * chain.factors[f].slp.addition_count();
        cur[f] = chain.factors[f].matrix.rows;
    }
    return total;
}

BitVectorTensor apply(const KroneckerChain& chain, const BitVectorTensor& v,
                      const std::vector<std::size_t>& order, int workers,
                      OpCounter* counter) {
    validate_chain_and_order(chain, order);
    const std::size_t d = chain.factors.size();
    const std::uint64_t tw = chain.trailing_identity / kWordBits;
    if (v.mode_lengths.size() != d + 1 ||
        v.mode_lengths.back() != chain.trailing_identity)
        throw std::invalid_argument("tensor modes do not match chain");
    for (std::size_t k = 0; k < d; ++k)
        if (v.mode_lengths[k] != chain.factors[k].matrix.cols)
            throw std::invalid_argument("tensor modes do not match chain");
    if (v.words.size() * kWordBits != v.bit_length())
        throw std::invalid_argument("tensor word storage does not match modes");

    BitVectorTensor result;
    for (const KroneckerFactor& f : chain.factors)
        result.mode_lengths.push_back(f.matrix.rows);
    result.mode_lengths.push_back(chain.trailing_identity);
    if (d == 0) {
        result.words = v.words;
        return result;
    }

    // Fuse adjacent application steps whose factors are small enough for a
    // register tile, starting nearest the trailing identity.
    std::vector<int> pair_with(d, -1);
    std::vector<std::size_t> candidates;
    for (std::size_t p = 0; p + 1 < d; ++p) {
        const Gf2Matrix& m1 = chain.factors[order[p]].matrix;
        const Gf2Matrix& m2 = chain.factors[order[p + 1]].matrix;
        if (std::max(m1.rows, m1.cols) <= 8 && std::max(m2.rows, m2.cols) <= 8)
            candidates.push_back(p);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t a, std::size_t b) {
                  return std::max(order[a], order[a + 1]) >
                         std::max(order[b], order[b + 1]);
              });
    std::vector<bool> used(d, false);
    for (std::size_t p : candidates) {
        if (used[p] || used[p + 1]) continue;
        pair_with[p] = static_cast<int>(p + 1);
        used[p] = used[p + 1] = true;
    }

    // Stage sizes for the two scratch buffers.
    std::vector<std::uint64_t> cur;
    for (const KroneckerFactor& f : chain.factors) cur.push_back(f.matrix.cols);
    std::uint64_t max_words = 0;
    {
        std::vector<std::uint64_t> sim = cur;
        for (std::size_t p = 0; p < d;) {
            sim[order[p]] = chain.factors[order[p]].matrix.rows;
            if (pair_with[p] >= 0) {
                sim[order[p + 1]] = chain.factors[order[p + 1]].matrix.rows;
                p += 2;
            } else {
                p += 1;
            }
            std::uint64_t size = tw;
            for (std::uint64_t m : sim) size *= m;
            max_words = std::max(max_words, size);
        }
    }

    std::vector<std::uint64_t> buf_a, buf_b;
    result.words.resize(result.bit_length() / kWordBits);
    const std::uint64_t* src = v.words.data();
    std::size_t pass_index = 0;
    for (std::size_t p = 0; p < d;) {
        const bool last = (pair_with[p] >= 0 ? p + 2 : p + 1) == d;
        std::uint64_t* dst;
        if (last) {
            dst = result.words.data();
        } else if (pass_index % 2 == 0) {
            buf_a.resize(max_words);
            dst = buf_a.data();
        } else {
            buf_b.resize(max_words);
            dst = buf_b.data();
        }

        if (pair_with[p] >= 0) {
            const std::size_t f = order[p], g = order[p + 1];
            const std::size_t x = std::min(f, g), y = std::max(f, g);
            FusedDims dim;
            dim.outer = 1;
            for (std::size_t k = 0; k < x; ++k) dim.outer *= cur[k];
            dim.mid = 1;
            for (std::size_t k = x + 1; k < y; ++k) dim.mid *= cur[k];
            dim.inner = tw;
            for (std::size_t k = y + 1; k < d; ++k) dim.inner *= cur[k];
            dim.ax = chain.factors[x].matrix.cols;
            dim.bx = chain.factors[x].matrix.rows;
            dim.ay = chain.factors[y].matrix.cols;
            dim.by = chain.factors[y].matrix.rows;
            dim.first_is_x = (f == x);
            fused_pair_step(chain.factors[f].slp, chain.factors[g].slp, dim,
                            src, dst, workers, counter);
            cur[f] = chain.factors[f].matrix.rows;
            cur[g] = chain.factors[g].matrix.rows;
            p += 2;
        } else {
            const std::size_t f = order[p];
            std::uint64_t outer = 1, inner = tw;
            for (std::size_t k = 0; k < f; ++k) outer *= cur[k];
            for (std::size_t k = f + 1; k < d; ++k) inner *= cur[k];
            mode_step(chain.factors[f].slp, src, dst, outer, inner, workers,
                      counter);
            cur[f] = chain.factors[f].matrix.rows;
            p += 1;
        }
        src = dst;
        ++pass_index;
    }
    return result;
}

} // namespace bmm::yates
