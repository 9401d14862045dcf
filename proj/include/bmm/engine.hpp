#pragma once

#include <cstdint>
#include <vector>

#include "bmm/bitmatrix.hpp"
#include "bmm/counter.hpp"
#include "bmm/decomposition.hpp"
#include "bmm/plan.hpp"

namespace bmm {

// Addition is OR or XOR respectively; multiplication is AND in both.
enum class Semiring { BooleanOrAnd, Gf2XorAnd };

enum class Algo { Cubic, StrassenWinograd, AltSelfInverse, AltChaining };

enum class BasisFactor { Phi, Psi, Chi };

// The bilinear scheme an algorithm runs on. Throws for Cubic.
const Decomposition& decomposition_for(Algo algo);

// 64x64 block product. b_transposed holds the right operand column-major:
// word k is column k of B. Bit k of out[i] is the reduction over
// a[i] & b_transposed[k]: popcount parity over GF(2), any-nonzero over the
// Boolean semiring. Callers account for kernel_invocations.
void kernel64(const std::uint64_t* a, const std::uint64_t* b_transposed,
              std::uint64_t* out, Semiring ring);

// Schoolbook product, the reference every fast path is checked against.
// Accepts any rectangular shapes with a.cols = b.rows; dimensions that are
// all multiples of 64 run blockwise through kernel64, anything else through
// a row-combination fallback.
BitMatrix multiply_cubic(const BitMatrix& a, const BitMatrix& b, Semiring ring,
                         int workers = 1, OpCounter* counter = nullptr);

// Applies the chosen basis factor to the outer `levels` modes of an
// interleaved vector, in place. Identity factors are skipped outright.
void basis_change(BitVectorTensor& v, const Decomposition& d, BasisFactor which,
                  int levels, int workers = 1, OpCounter* counter = nullptr);

// Core layered multiply on operands already in the decomposition's basis
// and interleaved layout, over d_serial + d_parallel levels (plan.d_host is
// ignored here; host levels are the pipeline's job). Serial levels recurse
// depth-first with per-level scratch; parallel levels run as whole-array
// expand and compress passes with the last expansion level, the 7 block
// products, and the first compression level fused per position.
BitVectorTensor multiply_alt(const BitVectorTensor& a_hat,
                             const BitVectorTensor& b_hat,
                             const Decomposition& d, const LayerPlan& plan,
                             OpCounter* counter = nullptr);

// Fast GF(2) multiply by the given scheme: interleave, change basis, run
// multiply_alt (or the work pipeline when plan.d_host > 0), change back.
// Requires square n = 64 * 2^k operands and plan.depth() = k. The Boolean
// semiring is refused: these schemes cancel terms, which needs subtraction.
BitMatrix multiply(const BitMatrix& a, const BitMatrix& b, Algo algo,
                   const LayerPlan& plan, Semiring ring,
                   OpCounter* counter = nullptr);

BitMatrix multiply_strassen_winograd(const BitMatrix& a, const BitMatrix& b,
                                     const LayerPlan& plan,
                                     Semiring ring = Semiring::Gf2XorAnd,
                                     OpCounter* counter = nullptr);

// Left-fold of multiply_alt over two or more operands that are already in
// the decomposition's basis. Each intermediate product is produced in that
// same basis, so no per-step conversions happen; the caller applies one Chi
// change to the final result. Requires traits.supports_chaining.
BitVectorTensor chain_multiply(const std::vector<BitVectorTensor>& matrices_hat,
                               const Decomposition& d, const LayerPlan& plan,
                               OpCounter* counter = nullptr);

} // namespace bmm
