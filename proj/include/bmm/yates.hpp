#pragma once

#include <cstdint>
#include <vector>

#include "bmm/bitmatrix.hpp"
#include "bmm/counter.hpp"
#include "bmm/decomposition.hpp"

namespace bmm::yates {

// One factor of a Kronecker product chain: a b x a coefficient matrix and
// the straight-line program that applies it to a group of word registers.
struct KroneckerFactor {
    Gf2Matrix matrix;
    StraightLineProgram slp;
};

// The linear map (M_0 (x) M_1 (x) ... (x) M_{d-1} (x) I_trailing). The
// trailing identity is a bit count and must be a positive multiple of 64.
struct KroneckerChain {
    std::vector<KroneckerFactor> factors;
    std::uint64_t trailing_identity = 64;
};

// Exact word additions apply() performs for this application order:
// sum over steps of P_f * product of the other modes' current lengths *
// trailing words, where a mode's length switches from cols to rows once its
// factor has been applied. order[p] names the factor applied at step p.
std::uint64_t cost(const KroneckerChain& chain,
                   const std::vector<std::size_t>& order);

// Applies the chain to v (modes must be [cols_0, ..., cols_{d-1}, trailing])
// one factor per pass in the given order, double-buffered. Adjacent passes
// whose factors both have rows and cols at most 8 are fused into one
// register-tile pass, innermost modes first; results and counted additions
// are identical either way. The result is the same for every order.
BitVectorTensor apply(const KroneckerChain& chain, const BitVectorTensor& v,
                      const std::vector<std::size_t>& order, int workers = 1,
                      OpCounter* counter = nullptr);

// One Kronecker pass, exposed for the engine's layered passes: transforms a
// mode of length slp.input_arity (subvector stride inner_words) into
// slp.output_arity, for `outer` independent groups.
// in is [outer][input_arity][inner_words], out [outer][output_arity][inner_words].
void mode_step(const StraightLineProgram& slp, const std::uint64_t* in,
               std::uint64_t* out, std::uint64_t outer,
               std::uint64_t inner_words, int workers, OpCounter* counter);

// Same pass for an in-place program (basis changes): data is
// [outer][arity][inner_words] and is rewritten in place.
void mode_step_in_place(const StraightLineProgram& slp, std::uint64_t* data,
                        std::uint64_t outer, std::uint64_t inner_words,
                        int workers, OpCounter* counter);

} // namespace bmm::yates
