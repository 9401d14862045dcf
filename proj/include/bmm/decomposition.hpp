#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bmm {

// Small dense matrix over GF(2), row-major, ceil(cols/64) words per row.
// Holds algorithm coefficients (a few dozen rows at most), not matrix data.
struct Gf2Matrix {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<std::uint64_t> words;

    static Gf2Matrix zeros(std::uint64_t rows, std::uint64_t cols);
    static Gf2Matrix identity(std::uint64_t n);
    // One string per row, '0'/'1' characters, leftmost character is column 0.
    static Gf2Matrix from_rows(std::initializer_list<std::string_view> rows);

    std::uint64_t words_per_row() const { return (cols + 63) / 64; }
    bool get(std::uint64_t i, std::uint64_t j) const;
    void set(std::uint64_t i, std::uint64_t j, bool value);

    Gf2Matrix operator*(const Gf2Matrix& rhs) const;
    Gf2Matrix transposed() const;
    bool is_identity() const;
    // Gauss-Jordan; empty when singular.
    std::optional<Gf2Matrix> inverse() const;

    bool operator==(const Gf2Matrix&) const = default;
};

Gf2Matrix kronecker(const Gf2Matrix& a, const Gf2Matrix& b);

// Rows of '0'/'1' characters separated by '\n', no trailing newline.
std::string to_text(const Gf2Matrix& m);

enum class WeightAxis { Rows, Cols };

// Per-row or per-column popcounts, sorted ascending.
std::vector<std::uint64_t> weight_distribution(const Gf2Matrix& m, WeightAxis axis);

bool check_self_inverse(const Gf2Matrix& m);
bool check_mutual_inverse(const Gf2Matrix& a, const Gf2Matrix& b);

// Word-register program: Copy loads a register from another, Xor adds one
// in. Inputs arrive in registers 0..input_arity-1; results are read from the
// `outputs` registers after the last step. Additions (Xor steps) are the
// cost; copies are free in every count this project reports.
struct SlpStep {
    enum class Op : std::uint8_t { Copy, Xor };
    Op op;
    std::uint16_t target;
    std::uint16_t source;
};

struct StraightLineProgram {
    int input_arity = 0;
    int output_arity = 0;
    int register_count = 0;
    std::vector<SlpStep> steps;
    std::vector<std::uint16_t> outputs;

    int addition_count() const;
    // True when the program reads and writes the same registers 0..k-1 with
    // no copies, so it can run directly on a buffer holding the inputs.
    bool in_place() const;
};

std::vector<std::uint64_t> slp_eval(const StraightLineProgram& slp,
                                    const std::vector<std::uint64_t>& inputs);

// One recursion level of an algorithm for the s x t by t x u product with r
// elementary products.
struct TripleParams {
    int s = 2;
    int t = 2;
    int u = 2;
    int r = 7;

    bool operator==(const TripleParams&) const = default;
};

// A bilinear algorithm in raw form: C = zeta * (xi a  elementwise-and  eta b)
// where a, b are the flattened operands. Rows of xi/eta produce the r
// elementary products; zeta combines them into the flattened result.
// `level_params` keeps the per-level shape for composites built with
// kronecker(); composite indices interleave level digits in that order.
struct BilinearTriple {
    Gf2Matrix zeta; // su x r
    Gf2Matrix xi;   // r x st
    Gf2Matrix eta;  // r x tu
    TripleParams params;
    std::vector<TripleParams> level_params;
};

// Exhaustive triple product property check: for every index combination,
// sum_h zeta[(i',k'), h] * xi[h, (i,j)] * eta[h, (j',k)]  equals 1 over
// GF(2) exactly when i=i', j=j', k=k'. True iff the triple multiplies
// correctly for all inputs.
bool verify_triple_product(const BilinearTriple& t);

BilinearTriple kronecker(const BilinearTriple& a, const BilinearTriple& b);

struct DecompositionTraits {
    bool self_inverse_bases = false;
    bool supports_chaining = false;
};

// A bilinear algorithm factored through basis changes: the raw triple is
// (chi*gamma, alpha*phi, beta*psi) with phi/psi/chi invertible. Operands are
// moved into the alternative basis once (phi/psi), the cheap sparse
// alpha/beta/gamma run per level, and chi moves the result back.
struct Decomposition {
    Gf2Matrix alpha; // r x st
    Gf2Matrix beta;  // r x tu
    Gf2Matrix gamma; // su x r
    Gf2Matrix phi;   // st x st
    Gf2Matrix psi;   // tu x tu
    Gf2Matrix chi;   // su x su
    StraightLineProgram slp_alpha, slp_beta, slp_gamma;
    StraightLineProgram slp_phi, slp_psi, slp_chi;
    TripleParams params;
    DecompositionTraits traits;
};

// The raw triple this decomposition factors: zeta = chi*gamma,
// xi = alpha*phi, eta = beta*psi.
BilinearTriple compose(const Decomposition& d);

enum class Builtin { StrassenWinograd, AltSelfInverse, AltChaining, Elementary };

const Decomposition& builtin(Builtin which);

enum class CostPart { BasisChanges, LinearCombinations };

// Additions performed by `depth` recursion levels of d on one operand set,
// in units of one trailing-subtensor addition (multiply by trailing bits /
// word width for word counts). BasisChanges covers all three basis
// transforms together, LinearCombinations covers alpha+beta+gamma. Requires
// the diagonal case s = t = u with r > s^2.
std::uint64_t predicted_additions(const Decomposition& d, int depth, CostPart part);

} // namespace bmm
