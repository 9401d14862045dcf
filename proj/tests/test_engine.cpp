#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "bmm/bitmatrix.hpp"
#include "bmm/counter.hpp"
#include "bmm/decomposition.hpp"
#include "bmm/engine.hpp"
#include "bmm/plan.hpp"

using namespace bmm;

namespace {

LayerPlan plan_for(int d_serial, int d_parallel, int d_host = 0,
                   int workers = 1) {
    LayerPlan p;
    p.d_host = d_host;
    p.d_serial = d_serial;
    p.d_parallel = d_parallel;
    p.workers = workers;
    return p;
}

std::uint64_t pow_u64(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

BitMatrix naive_multiply(const BitMatrix& a, const BitMatrix& b,
                         Semiring ring) {
    BitMatrix c = BitMatrix::zeros(a.rows, b.cols);
    for (std::uint64_t i = 0; i < a.rows; ++i) {
        for (std::uint64_t j = 0; j < b.cols; ++j) {
            bool acc = false;
            for (std::uint64_t k = 0; k < a.cols; ++k) {
                const bool p = a.get(i, k) && b.get(k, j);
                if (ring == Semiring::Gf2XorAnd) {
                    acc ^= p;
                } else if (p) {
                    acc = true;
                    break;
                }
            }
            c.set(i, j, acc);
        }
    }
    return c;
}

BitVectorTensor random_hat(std::vector<std::uint64_t> modes,
                           std::uint32_t seed) {
    BitVectorTensor t;
    t.mode_lengths = std::move(modes);
    t.words.resize(t.bit_length() / kWordBits);
    std::mt19937_64 rng(seed);
    for (std::uint64_t& w : t.words) w = rng();
    return t;
}

BitVectorTensor hat_xor(const BitVectorTensor& a, const BitVectorTensor& b) {
    BitVectorTensor r = a;
    for (std::size_t w = 0; w < r.words.size(); ++w) r.words[w] ^= b.words[w];
    return r;
}

// Interleave, change bases, multiply in the alternative basis, undo the
// output basis, de-interleave.
BitMatrix alt_product(const BitMatrix& a, const BitMatrix& b,
                      const Decomposition& d, const LayerPlan& plan) {
    BitVectorTensor a_hat = to_interleaved(a, plan, Operand::Left);
    BitVectorTensor b_hat = to_interleaved(b, plan, Operand::Right);
    basis_change(a_hat, d, BasisFactor::Phi, plan.depth());
    basis_change(b_hat, d, BasisFactor::Psi, plan.depth());
    BitVectorTensor c_hat = multiply_alt(a_hat, b_hat, d, plan);
    basis_change(c_hat, d, BasisFactor::Chi, plan.depth());
    return from_interleaved(c_hat, plan, Operand::Result);
}

} // namespace

TEST_CASE("kernel64 matches the bitwise definition") {
    const BitMatrix a = BitMatrix::random(64, 64, 11);
    const BitMatrix b = BitMatrix::random(64, 64, 12);
    BitMatrix bt = b;
    transpose_blocks64(bt);
    std::uint64_t out[kBlockWords];

    kernel64(a.row(0), bt.row(0), out, Semiring::Gf2XorAnd);
    const BitMatrix want_gf2 = naive_multiply(a, b, Semiring::Gf2XorAnd);
    for (std::uint64_t i = 0; i < 64; ++i) CHECK(out[i] == want_gf2.row(i)[0]);

    kernel64(a.row(0), bt.row(0), out, Semiring::BooleanOrAnd);
    const BitMatrix want_bool = naive_multiply(a, b, Semiring::BooleanOrAnd);
    for (std::uint64_t i = 0; i < 64; ++i) CHECK(out[i] == want_bool.row(i)[0]);

    std::uint64_t ident[kBlockWords];
    for (std::uint64_t i = 0; i < 64; ++i) ident[i] = std::uint64_t{1} << i;
    kernel64(ident, bt.row(0), out, Semiring::Gf2XorAnd);
    for (std::uint64_t i = 0; i < 64; ++i) CHECK(out[i] == b.row(i)[0]);

    std::uint64_t ones[kBlockWords];
    for (std::uint64_t i = 0; i < 64; ++i) ones[i] = ~std::uint64_t{0};
    kernel64(ones, ones, out, Semiring::Gf2XorAnd);
    for (std::uint64_t i = 0; i < 64; ++i) CHECK(out[i] == 0);
    kernel64(ones, ones, out, Semiring::BooleanOrAnd);
    for (std::uint64_t i = 0; i < 64; ++i) CHECK(out[i] == ~std::uint64_t{0});
}

TEST_CASE("cubic multiply agrees with the naive oracle") {
    BitMatrix a2 = BitMatrix::zeros(2, 2);
    a2.set(0, 0, true); a2.set(0, 1, true); a2.set(1, 1, true);
    BitMatrix b2 = BitMatrix::zeros(2, 2);
    b2.set(0, 0, true); b2.set(1, 0, true); b2.set(1, 1, true);

    const BitMatrix c_gf2 = multiply_cubic(a2, b2, Semiring::Gf2XorAnd);
    CHECK(!c_gf2.get(0, 0));
    CHECK(c_gf2.get(0, 1));
    CHECK(c_gf2.get(1, 0));
    CHECK(c_gf2.get(1, 1));

    const BitMatrix c_bool = multiply_cubic(a2, b2, Semiring::BooleanOrAnd);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(c_bool.get(i, j));

    for (Semiring ring : {Semiring::Gf2XorAnd, Semiring::BooleanOrAnd}) {
        BitMatrix ident = BitMatrix::zeros(128, 128);
        for (std::uint64_t i = 0; i < 128; ++i) ident.set(i, i, true);
        const BitMatrix m = BitMatrix::random(128, 128, 21);
        CHECK(multiply_cubic(ident, m, ring) == m);
        CHECK(multiply_cubic(m, ident, ring) == m);

        const BitMatrix wide_a = BitMatrix::random(128, 192, 22);
        const BitMatrix wide_b = BitMatrix::random(192, 64, 23);
        CHECK(multiply_cubic(wide_a, wide_b, ring) ==
              naive_multiply(wide_a, wide_b, ring));

        const BitMatrix odd_a = BitMatrix::random(130, 70, 24);
        const BitMatrix odd_b = BitMatrix::random(70, 50, 25);
        CHECK(multiply_cubic(odd_a, odd_b, ring) ==
              naive_multiply(odd_a, odd_b, ring));
    }

    const BitMatrix bad = BitMatrix::random(64, 65, 26);
    const BitMatrix sq = BitMatrix::random(64, 64, 27);
    CHECK_THROWS_AS(multiply_cubic(bad, sq, Semiring::Gf2XorAnd), ShapeError);
}

TEST_CASE("cubic multiply counts block products and folds") {
    const BitMatrix a = BitMatrix::random(128, 128, 31);
    const BitMatrix b = BitMatrix::random(128, 128, 32);

    OpCounter counter;
    multiply_cubic(a, b, Semiring::Gf2XorAnd, 1, &counter);
    CHECK(counter.kernel_invocations.load() == 8);
    CHECK(counter.word_ands.load() == 8 * kBlockBits);
    CHECK(counter.word_xors.load() == 4 * kBlockWords);
    CHECK(counter.word_ors.load() == 0);

    counter.reset();
    multiply_cubic(a, b, Semiring::BooleanOrAnd, 1, &counter);
    CHECK(counter.kernel_invocations.load() == 8);
    CHECK(counter.word_ors.load() == 4 * kBlockWords);
    CHECK(counter.word_xors.load() == 0);

    counter.reset();
    const BitMatrix c1 = multiply_cubic(a, b, Semiring::Gf2XorAnd, 4, &counter);
    CHECK(c1 == multiply_cubic(a, b, Semiring::Gf2XorAnd));
    CHECK(counter.kernel_invocations.load() == 8);
    CHECK(counter.word_xors.load() == 4 * kBlockWords);
}

TEST_CASE("recursive bit-operation count crosses over at n = 512") {
    auto recursive_bops = [](int k) {
        return 6 * pow_u64(7, k) - 5 * pow_u64(2, k) * pow_u64(2, k);
    };
    auto cubic_bops = [](int k) {
        const std::uint64_t n = pow_u64(2, k);
        return 2 * n * n * n - n * n;
    };
    CHECK(recursive_bops(9) <= cubic_bops(9));
    CHECK(recursive_bops(8) > cubic_bops(8));
}

TEST_CASE("decomposition_for maps algorithms to schemes") {
    CHECK(&decomposition_for(Algo::StrassenWinograd) ==
          &builtin(Builtin::StrassenWinograd));
    CHECK(&decomposition_for(Algo::AltSelfInverse) ==
          &builtin(Builtin::AltSelfInverse));
    CHECK(&decomposition_for(Algo::AltChaining) ==
          &builtin(Builtin::AltChaining));
    CHECK_THROWS_AS(decomposition_for(Algo::Cubic), std::invalid_argument);
}

TEST_CASE("auto_plan splits levels and validates the dimension") {
    LayerPlan p = LayerPlan::auto_plan(64, 1);
    CHECK(p.d_host == 0);
    CHECK(p.d_serial == 0);
    CHECK(p.d_parallel == 0);
    CHECK(p.matrix_dim() == 64);

    p = LayerPlan::auto_plan(512, 4);
    CHECK(p.d_serial == 0);
    CHECK(p.d_parallel == 3);
    CHECK(p.workers == 4);

    p = LayerPlan::auto_plan(4096, 2);
    CHECK(p.d_serial == 3);
    CHECK(p.d_parallel == 3);
    CHECK(p.matrix_dim() == 4096);

    p = LayerPlan::auto_plan(16384, 0);
    CHECK(p.d_serial == 5);
    CHECK(p.d_parallel == 3);
    CHECK(p.workers == 1);

    CHECK_THROWS_AS(LayerPlan::auto_plan(96, 1), ShapeError);
    CHECK_THROWS_AS(LayerPlan::auto_plan(32, 1), ShapeError);
    CHECK_THROWS_AS(LayerPlan::auto_plan(0, 1), ShapeError);
}

TEST_CASE("basis changes invert and count word operations") {
    const Decomposition& asi = builtin(Builtin::AltSelfInverse);
    const Decomposition& ach = builtin(Builtin::AltChaining);
    const Decomposition& sw = builtin(Builtin::StrassenWinograd);

    const BitVectorTensor original = random_hat({4, 4, kBlockBits}, 41);

    BitVectorTensor t = original;
    OpCounter counter;
    basis_change(t, asi, BasisFactor::Phi, 2, 1, &counter);
    CHECK(t != original);
    CHECK(counter.word_xors.load() == 1024);
    basis_change(t, asi, BasisFactor::Phi, 2, 1, &counter);
    CHECK(t == original);
    CHECK(counter.word_xors.load() == 2048);

    BitVectorTensor via_phi = original;
    BitVectorTensor via_psi = original;
    basis_change(via_phi, asi, BasisFactor::Phi, 2);
    basis_change(via_psi, asi, BasisFactor::Psi, 2);
    CHECK(via_phi == via_psi);

    t = original;
    basis_change(t, asi, BasisFactor::Chi, 2);
    CHECK(t != original);
    basis_change(t, asi, BasisFactor::Chi, 2);
    CHECK(t == original);

    t = original;
    basis_change(t, asi, BasisFactor::Phi, 2);
    basis_change(t, asi, BasisFactor::Chi, 2);
    CHECK(t != original);

    t = original;
    basis_change(t, ach, BasisFactor::Phi, 2);
    basis_change(t, ach, BasisFactor::Chi, 2);
    CHECK(t == original);
    t = original;
    basis_change(t, ach, BasisFactor::Chi, 2);
    basis_change(t, ach, BasisFactor::Phi, 2);
    CHECK(t == original);

    t = original;
    counter.reset();
    basis_change(t, sw, BasisFactor::Phi, 2, 1, &counter);
    CHECK(t == original);
    CHECK(counter.word_xors.load() == 0);

    t = original;
    basis_change(t, asi, BasisFactor::Phi, 0);
    CHECK(t == original);

    t = original;
    basis_change(t, asi, BasisFactor::Phi, 2, 4);
    basis_change(t, asi, BasisFactor::Phi, 2, 4);
    CHECK(t == original);

    BitVectorTensor wrong = random_hat({7, kBlockBits}, 42);
    CHECK_THROWS_AS(basis_change(wrong, asi, BasisFactor::Phi, 1),
                    std::invalid_argument);
    t = original;
    CHECK_THROWS_AS(basis_change(t, asi, BasisFactor::Phi, 3),
                    std::invalid_argument);
}

TEST_CASE("alternative-basis multiply matches the cubic product") {
    const BitMatrix a = BitMatrix::random(128, 128, 51);
    const BitMatrix b = BitMatrix::random(128, 128, 52);
    const BitMatrix want = multiply_cubic(a, b, Semiring::Gf2XorAnd);

    for (Builtin which : {Builtin::AltSelfInverse, Builtin::AltChaining,
                          Builtin::StrassenWinograd}) {
        const Decomposition& d = builtin(which);
        CHECK(alt_product(a, b, d, plan_for(1, 0)) == want);
        CHECK(alt_product(a, b, d, plan_for(0, 1)) == want);
    }

    const BitMatrix a4 = BitMatrix::random(256, 256, 53);
    const BitMatrix b4 = BitMatrix::random(256, 256, 54);
    const BitMatrix want4 = multiply_cubic(a4, b4, Semiring::Gf2XorAnd);
    const Decomposition& asi = builtin(Builtin::AltSelfInverse);
    CHECK(alt_product(a4, b4, asi, plan_for(2, 0)) == want4);
    CHECK(alt_product(a4, b4, asi, plan_for(1, 1)) == want4);
    CHECK(alt_product(a4, b4, asi, plan_for(0, 2)) == want4);
}

TEST_CASE("alternative-basis multiply is bilinear and counts kernels") {
    const Decomposition& asi = builtin(Builtin::AltSelfInverse);

    struct Split {
        int d_serial, d_parallel;
    };
    for (Split s : {Split{1, 0}, Split{0, 1}, Split{1, 1}, Split{2, 1}}) {
        const LayerPlan plan = plan_for(s.d_serial, s.d_parallel);
        const int depth = plan.depth();
        std::vector<std::uint64_t> modes(depth, 4);
        modes.push_back(kBlockBits);
        const BitVectorTensor a = random_hat(modes, 61 + depth);
        const BitVectorTensor b = random_hat(modes, 62 + depth);

        OpCounter counter;
        multiply_alt(a, b, asi, plan, &counter);
        const std::uint64_t kernels = pow_u64(7, depth);
        CHECK(counter.kernel_invocations.load() == kernels);
        CHECK(counter.word_ands.load() == kernels * kBlockBits);
        CHECK(counter.word_ors.load() == 0);
    }

    std::vector<std::uint64_t> modes2 = {4, 4, kBlockBits};
    const BitVectorTensor a1 = random_hat(modes2, 63);
    const BitVectorTensor a2 = random_hat(modes2, 64);
    const BitVectorTensor b1 = random_hat(modes2, 65);
    const LayerPlan plan2 = plan_for(1, 1);
    const BitVectorTensor lhs = multiply_alt(hat_xor(a1, a2), b1, asi, plan2);
    const BitVectorTensor rhs =
        hat_xor(multiply_alt(a1, b1, asi, plan2), multiply_alt(a2, b1, asi, plan2));
    CHECK(lhs == rhs);

    BitVectorTensor zero;
    zero.mode_lengths = modes2;
    zero.words.assign(a1.words.size(), 0);
    const BitVectorTensor zc = multiply_alt(a1, zero, asi, plan2);
    CHECK(zc == zero);
    const BitVectorTensor zc2 = multiply_alt(zero, b1, asi, plan2);
    CHECK(zc2 == zero);

    CHECK_THROWS_AS(multiply_alt(a1, b1, asi, plan_for(3, 0)),
                    std::invalid_argument);
    LayerPlan bad = plan_for(1, 1);
    bad.d_inner = 2;
    CHECK_THROWS_AS(multiply_alt(a1, b1, asi, bad), std::invalid_argument);
}

TEST_CASE("linear-combination word operations match the predicted counts") {
    const Decomposition& asi = builtin(Builtin::AltSelfInverse);
    struct Split {
        int d_serial, d_parallel;
    };
    const Split splits[] = {{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2},
                            {3, 0}, {2, 1}, {1, 2}, {0, 3}};
    for (Split s : splits) {
        const LayerPlan plan = plan_for(s.d_serial, s.d_parallel);
        const int depth = plan.depth();
        std::vector<std::uint64_t> modes(depth, 4);
        modes.push_back(kBlockBits);
        const BitVectorTensor a = random_hat(modes, 71 + depth);
        const BitVectorTensor b = random_hat(modes, 72 + depth);

        OpCounter counter;
        multiply_alt(a, b, asi, plan, &counter);
        const std::uint64_t want =
            predicted_additions(asi, depth, CostPart::LinearCombinations) *
            kBlockWords;
        CHECK(counter.word_xors.load() == want);
    }
}

TEST_CASE("strassen-winograd front end validates and counts") {
    const BitMatrix a = BitMatrix::random(128, 128, 81);
    const BitMatrix b = BitMatrix::random(128, 128, 82);
    const BitMatrix want = multiply_cubic(a, b, Semiring::Gf2XorAnd);

    OpCounter counter;
    CHECK(multiply_strassen_winograd(a, b, plan_for(1, 0), Semiring::Gf2XorAnd,
                                     &counter) == want);
    CHECK(counter.kernel_invocations.load() == 7);
    const std::uint64_t lin = predicted_additions(
        builtin(Builtin::StrassenWinograd), 1, CostPart::LinearCombinations);
    CHECK(counter.word_xors.load() == lin * kBlockWords);

    counter.reset();
    CHECK(multiply_strassen_winograd(a, b, plan_for(0, 1), Semiring::Gf2XorAnd,
                                     &counter) == want);
    CHECK(counter.kernel_invocations.load() == 7);

    CHECK_THROWS_AS(
        multiply_strassen_winograd(a, b, plan_for(1, 0), Semiring::BooleanOrAnd),
        std::invalid_argument);
}

TEST_CASE("multiply dispatches and agrees across algorithms") {
    for (std::uint64_t n : {std::uint64_t{64}, std::uint64_t{128},
                            std::uint64_t{256}}) {
        const BitMatrix a = BitMatrix::random(n, n, 91 + n);
        const BitMatrix b = BitMatrix::random(n, n, 92 + n);
        const LayerPlan plan = LayerPlan::auto_plan(n, 1);
        const BitMatrix want =
            multiply(a, b, Algo::Cubic, plan, Semiring::Gf2XorAnd);
        CHECK(want == multiply_cubic(a, b, Semiring::Gf2XorAnd));
        for (Algo algo : {Algo::StrassenWinograd, Algo::AltSelfInverse,
                          Algo::AltChaining}) {
            CHECK(multiply(a, b, algo, plan, Semiring::Gf2XorAnd) == want);
        }
    }

    const BitMatrix a = BitMatrix::random(128, 128, 93);
    const BitMatrix b = BitMatrix::random(128, 128, 94);
    const LayerPlan plan128 = LayerPlan::auto_plan(128, 1);
    CHECK(multiply(a, b, Algo::Cubic, plan128, Semiring::BooleanOrAnd) ==
          naive_multiply(a, b, Semiring::BooleanOrAnd));

    BitMatrix ident = BitMatrix::zeros(128, 128);
    for (std::uint64_t i = 0; i < 128; ++i) ident.set(i, i, true);
    for (Algo algo : {Algo::StrassenWinograd, Algo::AltSelfInverse,
                      Algo::AltChaining}) {
        CHECK(multiply(a, ident, algo, plan128, Semiring::Gf2XorAnd) == a);
        CHECK(multiply(ident, a, algo, plan128, Semiring::Gf2XorAnd) == a);
        CHECK_THROWS_AS(multiply(a, b, algo, plan128, Semiring::BooleanOrAnd),
                        std::invalid_argument);
    }

    const BitMatrix c = BitMatrix::random(256, 256, 95);
    const BitMatrix d = BitMatrix::random(256, 256, 96);
    const BitMatrix e = BitMatrix::random(256, 256, 97);
    const LayerPlan plan256 = LayerPlan::auto_plan(256, 1);
    const BitMatrix cd =
        multiply(c, d, Algo::AltSelfInverse, plan256, Semiring::Gf2XorAnd);
    const BitMatrix de =
        multiply(d, e, Algo::AltSelfInverse, plan256, Semiring::Gf2XorAnd);
    CHECK(multiply(cd, e, Algo::AltSelfInverse, plan256, Semiring::Gf2XorAnd) ==
          multiply(c, de, Algo::AltSelfInverse, plan256, Semiring::Gf2XorAnd));

    const BitMatrix rect = BitMatrix::random(128, 64, 98);
    CHECK_THROWS_AS(
        multiply(a, rect, Algo::AltSelfInverse, plan128, Semiring::Gf2XorAnd),
        ShapeError);
    const BitMatrix odd = BitMatrix::random(96, 96, 99);
    CHECK_THROWS_AS(
        multiply(odd, odd, Algo::AltSelfInverse, plan128, Semiring::Gf2XorAnd),
        ShapeError);
    CHECK_THROWS_AS(multiply(a, b, Algo::AltSelfInverse, plan256,
                             Semiring::Gf2XorAnd),
                    std::invalid_argument);
}

TEST_CASE("single-bit probes cross block boundaries correctly") {
    const LayerPlan plan = LayerPlan::auto_plan(128, 1);
    const std::uint64_t coords[] = {62, 63, 64, 65};
    for (Algo algo : {Algo::StrassenWinograd, Algo::AltSelfInverse,
                      Algo::AltChaining}) {
        for (std::uint64_t i : coords) {
            for (std::uint64_t j : coords) {
                for (std::uint64_t k : coords) {
                    BitMatrix eij = BitMatrix::zeros(128, 128);
                    eij.set(i, j, true);
                    BitMatrix ejk = BitMatrix::zeros(128, 128);
                    ejk.set(j, k, true);
                    BitMatrix want = BitMatrix::zeros(128, 128);
                    want.set(i, k, true);
                    CHECK(multiply(eij, ejk, algo, plan, Semiring::Gf2XorAnd) ==
                          want);
                }
            }
        }
    }
}

TEST_CASE("chained multiplies stay in the output basis") {
    const Decomposition& ach = builtin(Builtin::AltChaining);
    const LayerPlan plan = plan_for(1, 1);

    const BitMatrix m0 = BitMatrix::random(256, 256, 101);
    const BitMatrix m1 = BitMatrix::random(256, 256, 102);
    const BitMatrix m2 = BitMatrix::random(256, 256, 103);
    const BitMatrix want = multiply_cubic(
        multiply_cubic(m0, m1, Semiring::Gf2XorAnd), m2, Semiring::Gf2XorAnd);

    BitVectorTensor first = to_interleaved(m0, plan, Operand::Left);
    basis_change(first, ach, BasisFactor::Phi, plan.depth());
    std::vector<BitVectorTensor> operands = {first};
    for (const BitMatrix* m : {&m1, &m2}) {
        BitVectorTensor hat = to_interleaved(*m, plan, Operand::Right);
        basis_change(hat, ach, BasisFactor::Psi, plan.depth());
        operands.push_back(std::move(hat));
    }

    BitVectorTensor c_hat = chain_multiply(operands, ach, plan);
    basis_change(c_hat, ach, BasisFactor::Chi, plan.depth());
    CHECK(from_interleaved(c_hat, plan, Operand::Result) == want);

    BitMatrix ident = BitMatrix::zeros(256, 256);
    for (std::uint64_t i = 0; i < 256; ++i) ident.set(i, i, true);
    BitVectorTensor ident_hat = to_interleaved(ident, plan, Operand::Right);
    basis_change(ident_hat, ach, BasisFactor::Psi, plan.depth());
    const BitVectorTensor kept =
        chain_multiply({operands[0], ident_hat}, ach, plan);
    CHECK(kept == operands[0]);

    const BitVectorTensor two = chain_multiply({operands[0], operands[1]},
                                               ach, plan);
    CHECK(two == multiply_alt(operands[0], operands[1], ach, plan));

    const Decomposition& sw = builtin(Builtin::StrassenWinograd);
    const LayerPlan plan128 = plan_for(1, 0);
    const BitMatrix s0 = BitMatrix::random(128, 128, 104);
    const BitMatrix s1 = BitMatrix::random(128, 128, 105);
    const BitMatrix s2 = BitMatrix::random(128, 128, 106);
    std::vector<BitVectorTensor> sw_ops = {
        to_interleaved(s0, plan128, Operand::Left),
        to_interleaved(s1, plan128, Operand::Right),
        to_interleaved(s2, plan128, Operand::Right)};
    const BitVectorTensor sw_hat = chain_multiply(sw_ops, sw, plan128);
    const BitMatrix sw_want = multiply_cubic(
        multiply_cubic(s0, s1, Semiring::Gf2XorAnd), s2, Semiring::Gf2XorAnd);
    CHECK(from_interleaved(sw_hat, plan128, Operand::Result) == sw_want);

    const Decomposition& asi = builtin(Builtin::AltSelfInverse);
    CHECK_THROWS_AS(chain_multiply(operands, asi, plan), std::invalid_argument);
    CHECK_THROWS_AS(chain_multiply({operands[0]}, ach, plan),
                    std::invalid_argument);
}
