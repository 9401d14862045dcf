#include "bmm/decomposition.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace bmm {

namespace {

std::uint64_t ipow(std::uint64_t base, int exp) {
    std::uint64_t v = 1;
    while (exp-- > 0) v *= base;
    return v;
}

void validate_slp(const StraightLineProgram& p) {
    if (p.input_arity < 0 || p.output_arity < 0 ||
        p.register_count < p.input_arity)
        throw std::invalid_argument("malformed straight-line program");
    for (const SlpStep& s : p.steps)
        if (s.target >= p.register_count || s.source >= p.register_count)
            throw std::invalid_argument("straight-line program register out of range");
    if (static_cast<int>(p.outputs.size()) != p.output_arity)
        throw std::invalid_argument("straight-line program output list mismatch");
    for (std::uint16_t o : p.outputs)
        if (o >= p.register_count)
            throw std::invalid_argument("straight-line program output out of range");
}

StraightLineProgram make_slp(int inputs, int regs,
                             std::initializer_list<SlpStep> steps,
                             std::initializer_list<std::uint16_t> outputs) {
    StraightLineProgram p;
    p.input_arity = inputs;
    p.register_count = regs;
    p.steps.assign(steps);
    p.outputs.assign(outputs);
    p.output_arity = static_cast<int>(p.outputs.size());
    validate_slp(p);
    return p;
}

StraightLineProgram identity_slp(int arity) {
    StraightLineProgram p;
    p.input_arity = arity;
    p.output_arity = arity;
    p.register_count = arity;
    for (int i = 0; i < arity; ++i)
        p.outputs.push_back(static_cast<std::uint16_t>(i));
    return p;
}

constexpr auto C = SlpStep::Op::Copy;
constexpr auto X = SlpStep::Op::Xor;

Decomposition make_strassen_winograd() {
    Decomposition d;
    d.params = {2, 2, 2, 7};
    d.alpha = Gf2Matrix::from_rows({
        "0011", "0100", "0101", "0111", "1111", "0010", "1000"});
    d.beta = Gf2Matrix::from_rows({
        "0011", "0010", "0101", "0111", "0100", "1111", "1000"});
    d.gamma = Gf2Matrix::from_rows({
        "0100001", "1101100", "0111010", "1111000"});
    d.phi = Gf2Matrix::identity(4);
    d.psi = Gf2Matrix::identity(4);
    d.chi = Gf2Matrix::identity(4);
    // Operand side reuses partial sums, so 4 additions reach 7 products.
    d.slp_alpha = make_slp(4, 11,
        {{C, 4, 2}, {X, 4, 3},            // t0 = a10 + a11
         {C, 5, 1},                       // t1 = a01
         {C, 6, 1}, {X, 6, 3},            // t2 = a01 + a11
         {C, 7, 2}, {X, 7, 6},            // t3 = a10 + t2
         {C, 8, 0}, {X, 8, 7},            // t4 = a00 + t3
         {C, 9, 2},                       // t5 = a10
         {C, 10, 0}},                     // t6 = a00
        {4, 5, 6, 7, 8, 9, 10});
    d.slp_beta = make_slp(4, 11,
        {{C, 4, 2}, {X, 4, 3},            // s0 = b10 + b11
         {C, 5, 2},                       // s1 = b10
         {C, 6, 1}, {X, 6, 3},            // s2 = b01 + b11
         {C, 7, 2}, {X, 7, 6},            // s3 = b10 + s2
         {C, 8, 1},                       // s4 = b01
         {C, 9, 0}, {X, 9, 7},            // s5 = b00 + s3
         {C, 10, 0}},                     // s6 = b00
        {4, 5, 6, 7, 8, 9, 10});
    d.slp_gamma = make_slp(7, 14,
        {{C, 7, 1}, {X, 7, 3},            // u0 = q1 + q3
         {C, 8, 2}, {X, 8, 7},            // u1 = q2 + u0
         {C, 9, 4}, {X, 9, 7},            // u2 = q4 + u0
         {C, 10, 1}, {X, 10, 6},          // c00 = q1 + q6
         {C, 11, 0}, {X, 11, 9},          // c01 = q0 + u2
         {C, 12, 5}, {X, 12, 8},          // c10 = q5 + u1
         {C, 13, 0}, {X, 13, 8}},         // c11 = q0 + u1
        {10, 11, 12, 13});
    d.slp_phi = identity_slp(4);
    d.slp_psi = identity_slp(4);
    d.slp_chi = identity_slp(4);
    d.traits = {true, true};
    return d;
}

Decomposition make_alt_self_inverse() {
    Decomposition d;
    d.params = {2, 2, 2, 7};
    d.alpha = Gf2Matrix::from_rows({
        "1000", "0100", "0010", "0001", "1001", "0101", "0011"});
    d.beta = Gf2Matrix::from_rows({
        "1000", "0010", "1001", "0001", "0100", "0101", "0011"});
    d.gamma = Gf2Matrix::from_rows({
        "1100000", "0000101", "0010010", "0101011"});
    d.phi = Gf2Matrix::from_rows({"1000", "0100", "0010", "0111"});
    d.psi = d.phi;
    d.chi = Gf2Matrix::from_rows({"1000", "0101", "0011", "0001"});
    d.slp_alpha = make_slp(4, 11,
        {{C, 4, 0}, {C, 5, 1}, {C, 6, 2}, {C, 7, 3},
         {C, 8, 0}, {X, 8, 3},            // t4 = a00 + a11
         {C, 9, 1}, {X, 9, 3},            // t5 = a01 + a11
         {C, 10, 2}, {X, 10, 3}},         // t6 = a10 + a11
        {4, 5, 6, 7, 8, 9, 10});
    d.slp_beta = make_slp(4, 11,
        {{C, 4, 0}, {C, 5, 2},
         {C, 6, 0}, {X, 6, 3},            // s2 = b00 + b11
         {C, 7, 3}, {C, 8, 1},
         {C, 9, 1}, {X, 9, 3},            // s5 = b01 + b11
         {C, 10, 2}, {X, 10, 3}},         // s6 = b10 + b11
        {4, 5, 6, 7, 8, 9, 10});
    d.slp_gamma = make_slp(7, 11,
        {{C, 7, 0}, {X, 7, 1},            // c00 = q0 + q1
         {C, 8, 4}, {X, 8, 6},            // c01 = q4 + q6
         {C, 9, 2}, {X, 9, 5},            // c10 = q2 + q5
         {C, 10, 1}, {X, 10, 3}, {X, 10, 5}, {X, 10, 6}}, // c11
        {7, 8, 9, 10});
    // x11 += x01 + x10, the rest stay put; its own inverse.
    d.slp_phi = make_slp(4, 4, {{X, 3, 1}, {X, 3, 2}}, {0, 1, 2, 3});
    d.slp_psi = d.slp_phi;
    // x01 += x11, x10 += x11; also its own inverse.
    d.slp_chi = make_slp(4, 4, {{X, 1, 3}, {X, 2, 3}}, {0, 1, 2, 3});
    d.traits = {true, false};
    return d;
}

Decomposition make_alt_chaining() {
    Decomposition d;
    d.params = {2, 2, 2, 7};
    d.alpha = Gf2Matrix::from_rows({
        "1000", "0100", "0010", "0001", "1010", "0110", "0011"});
    d.beta = Gf2Matrix::from_rows({
        "1000", "0011", "0010", "0001", "0100", "0110", "1010"});
    d.gamma = Gf2Matrix::from_rows({
        "1100000", "0110110", "0110101", "0001100"});
    d.phi = Gf2Matrix::from_rows({"1000", "0100", "0111", "0101"});
    d.psi = d.phi;
    d.chi = Gf2Matrix::from_rows({"1000", "0100", "0011", "0101"});
    d.slp_alpha = make_slp(4, 11,
        {{C, 4, 0}, {C, 5, 1}, {C, 6, 2}, {C, 7, 3},
         {C, 8, 0}, {X, 8, 2},            // t4 = a00 + a10
         {C, 9, 1}, {X, 9, 2},            // t5 = a01 + a10
         {C, 10, 2}, {X, 10, 3}},         // t6 = a10 + a11
        {4, 5, 6, 7, 8, 9, 10});
    d.slp_beta = make_slp(4, 11,
        {{C, 4, 0},
         {C, 5, 2}, {X, 5, 3},            // s1 = b10 + b11
         {C, 6, 2}, {C, 7, 3}, {C, 8, 1},
         {C, 9, 1}, {X, 9, 2},            // s5 = b01 + b10
         {C, 10, 0}, {X, 10, 2}},         // s6 = b00 + b10
        {4, 5, 6, 7, 8, 9, 10});
    d.slp_gamma = make_slp(7, 12,
        {{C, 7, 1}, {X, 7, 2}, {X, 7, 4}, // shared sum q1 + q2 + q4
         {C, 8, 0}, {X, 8, 1},            // c00 = q0 + q1
         {C, 9, 7}, {X, 9, 5},            // c01 = shared + q5
         {C, 10, 7}, {X, 10, 6},          // c10 = shared + q6
         {C, 11, 3}, {X, 11, 4}},         // c11 = q3 + q4
        {8, 9, 10, 11});
    // x11 += x01 first, then x10 += the new x11.
    d.slp_phi = make_slp(4, 4, {{X, 3, 1}, {X, 2, 3}}, {0, 1, 2, 3});
    d.slp_psi = d.slp_phi;
    // Inverse order: x10 += x11 while x11 is still transformed, then x11 += x01.
    d.slp_chi = make_slp(4, 4, {{X, 2, 3}, {X, 3, 1}}, {0, 1, 2, 3});
    d.traits = {false, true};
    return d;
}

Decomposition make_elementary() {
    Decomposition d;
    d.params = {2, 2, 2, 8};
    d.alpha = Gf2Matrix::from_rows({
        "1000", "1000", "0100", "0100", "0010", "0010", "0001", "0001"});
    d.beta = Gf2Matrix::from_rows({
        "1000", "0100", "0010", "0001", "1000", "0100", "0010", "0001"});
    d.gamma = Gf2Matrix::from_rows({
        "10100000", "01010000", "00001010", "00000101"});
    d.phi = Gf2Matrix::identity(4);
    d.psi = Gf2Matrix::identity(4);
    d.chi = Gf2Matrix::identity(4);
    d.slp_alpha = make_slp(4, 12,
        {{C, 4, 0}, {C, 5, 0}, {C, 6, 1}, {C, 7, 1},
         {C, 8, 2}, {C, 9, 2}, {C, 10, 3}, {C, 11, 3}},
        {4, 5, 6, 7, 8, 9, 10, 11});
    d.slp_beta = make_slp(4, 12,
        {{C, 4, 0}, {C, 5, 1}, {C, 6, 2}, {C, 7, 3},
         {C, 8, 0}, {C, 9, 1}, {C, 10, 2}, {C, 11, 3}},
        {4, 5, 6, 7, 8, 9, 10, 11});
    d.slp_gamma = make_slp(8, 12,
        {{C, 8, 0}, {X, 8, 2},
         {C, 9, 1}, {X, 9, 3},
         {C, 10, 4}, {X, 10, 6},
         {C, 11, 5}, {X, 11, 7}},
        {8, 9, 10, 11});
    d.slp_phi = identity_slp(4);
    d.slp_psi = identity_slp(4);
    d.slp_chi = identity_slp(4);
    d.traits = {true, true};
    return d;
}

} // namespace

Gf2Matrix Gf2Matrix::zeros(std::uint64_t rows, std::uint64_t cols) {
    Gf2Matrix m;
    m.rows = rows;
    m.cols = cols;
    m.words.assign(rows * ((cols + 63) / 64), 0);
    return m;
}

Gf2Matrix Gf2Matrix::identity(std::uint64_t n) {
    Gf2Matrix m = zeros(n, n);
    for (std::uint64_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
}

Gf2Matrix Gf2Matrix::from_rows(std::initializer_list<std::string_view> rows) {
    if (rows.size() == 0) throw std::invalid_argument("empty matrix literal");
    const std::uint64_t cols = rows.begin()->size();
    Gf2Matrix m = zeros(rows.size(), cols);
    std::uint64_t i = 0;
    for (std::string_view row : rows) {
        if (row.size() != cols)
            throw std::invalid_argument("ragged matrix literal");
        for (std::uint64_t j = 0; j < cols; ++j) {
            if (row[j] != '0' && row[j] != '1')
                throw std::invalid_argument("matrix literal must be 0/1");
            m.set(i, j, row[j] == '1');
        }
        ++i;
    }
    return m;
}

bool Gf2Matrix::get(std::uint64_t i, std::uint64_t j) const {
    if (i >= rows || j >= cols) throw std::invalid_argument("index out of range");
    return (words[i * words_per_row() + j / 64] >> (j % 64)) & 1u;
}

void Gf2Matrix::set(std::uint64_t i, std::uint64_t j, bool value) {
    if (i >= rows || j >= cols) throw std::invalid_argument("index out of range");
    std::uint64_t& w = words[i * words_per_row() + j / 64];
    const std::uint64_t bit = std::uint64_t{1} << (j % 64);
    w = value ? (w | bit) : (w & ~bit);
}

Gf2Matrix Gf2Matrix::operator*(const Gf2Matrix& rhs) const {
    if (cols != rhs.rows)
        throw std::invalid_argument("matrix product shape mismatch");
    Gf2Matrix out = zeros(rows, rhs.cols);
    const std::uint64_t owpr = out.words_per_row();
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j)
            if (get(i, j))
                for (std::uint64_t w = 0; w < owpr; ++w)
                    out.words[i * owpr + w] ^= rhs.words[j * owpr + w];
    return out;
}

Gf2Matrix Gf2Matrix::transposed() const {
    Gf2Matrix out = zeros(cols, rows);
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j)
            if (get(i, j)) out.set(j, i, true);
    return out;
}

bool Gf2Matrix::is_identity() const {
    if (rows != cols) return false;
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j)
            if (get(i, j) != (i == j)) return false;
    return true;
}

std::optional<Gf2Matrix> Gf2Matrix::inverse() const {
    if (rows != cols) throw std::invalid_argument("inverse needs a square matrix");
    const std::uint64_t n = rows;
    const std::uint64_t wpr = words_per_row();
    Gf2Matrix a = *this;
    Gf2Matrix inv = identity(n);
    for (std::uint64_t col = 0; col < n; ++col) {
        std::uint64_t pivot = col;
        while (pivot < n && !a.get(pivot, col)) ++pivot;
        if (pivot == n) return std::nullopt;
        if (pivot != col) {
            for (std::uint64_t w = 0; w < wpr; ++w) {
                std::swap(a.words[col * wpr + w], a.words[pivot * wpr + w]);
                std::swap(inv.words[col * wpr + w], inv.words[pivot * wpr + w]);
            }
        }
        for (std::uint64_t r = 0; r < n; ++r) {
            if (r == col || !a.get(r, col)) continue;
            for (std::uint64_t w = 0; w < wpr; ++w) {
                a.words[r * wpr + w] ^= a.words[col * wpr + w];
                inv.words[r * wpr + w] ^= inv.words[col * wpr + w];
            }
        }
    }
    return inv;
}

Gf2Matrix kronecker(const Gf2Matrix& a, const Gf2Matrix& b) {
    Gf2Matrix out = Gf2Matrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for (std::uint64_t i1 = 0; i1 < a.rows; ++i1)
        for (std::uint64_t j1 = 0; j1 < a.cols; ++j1) {
            if (!a.get(i1, j1)) continue;
            for (std::uint64_t i2 = 0; i2 < b.rows; ++i2)
                for (std::uint64_t j2 = 0; j2 < b.cols; ++j2)
                    if (b.get(i2, j2))
                        out.set(i1 * b.rows + i2, j1 * b.cols + j2, true);
        }
    return out;
}

std::string to_text(const Gf2Matrix& m) {
    std::string out;
    out.reserve(m.rows * (m.cols + 1));
    for (std::uint64_t i = 0; i < m.rows; ++i) {
        if (i) out.push_back('\n');
        for (std::uint64_t j = 0; j < m.cols; ++j)
            out.push_back(m.get(i, j) ? '1' : '0');
    }
    return out;
}

std::vector<std::uint64_t> weight_distribution(const Gf2Matrix& m, WeightAxis axis) {
    std::vector<std::uint64_t> weights;
    if (axis == WeightAxis::Rows) {
        const std::uint64_t wpr = m.words_per_row();
        for (std::uint64_t i = 0; i < m.rows; ++i) {
            std::uint64_t w = 0;
            for (std::uint64_t k = 0; k < wpr; ++k)
                w += std::popcount(m.words[i * wpr + k]);
            weights.push_back(w);
        }
    } else {
        for (std::uint64_t j = 0; j < m.cols; ++j) {
            std::uint64_t w = 0;
            for (std::uint64_t i = 0; i < m.rows; ++i) w += m.get(i, j);
            weights.push_back(w);
        }
    }
    std::sort(weights.begin(), weights.end());
    return weights;
}

bool check_self_inverse(const Gf2Matrix& m) {
    return m.rows == m.cols && (m * m).is_identity();
}

bool check_mutual_inverse(const Gf2Matrix& a, const Gf2Matrix& b) {
    return a.rows == a.cols && b.rows == b.cols && a.rows == b.rows &&
           (a * b).is_identity() && (b * a).is_identity();
}

int StraightLineProgram::addition_count() const {
    int n = 0;
    for (const SlpStep& s : steps) n += s.op == SlpStep::Op::Xor;
    return n;
}

bool StraightLineProgram::in_place() const {
    if (input_arity != output_arity) return false;
    for (int i = 0; i < output_arity; ++i)
        if (outputs[static_cast<std::size_t>(i)] != i) return false;
    for (const SlpStep& s : steps)
        if (s.op == SlpStep::Op::Copy) return false;
    return true;
}

std::vector<std::uint64_t> slp_eval(const StraightLineProgram& slp,
                                    const std::vector<std::uint64_t>& inputs) {
    validate_slp(slp);
    if (static_cast<int>(inputs.size()) != slp.input_arity)
        throw std::invalid_argument("straight-line program input arity mismatch");
    std::vector<std::uint64_t> regs(static_cast<std::size_t>(slp.register_count), 0);
    std::copy(inputs.begin(), inputs.end(), regs.begin());
    for (const SlpStep& s : slp.steps) {
        if (s.op == SlpStep::Op::Copy)
            regs[s.target] = regs[s.source];
        else
            regs[s.target] ^= regs[s.source];
    }
    std::vector<std::uint64_t> out;
    out.reserve(slp.outputs.size());
    for (std::uint16_t o : slp.outputs) out.push_back(regs[o]);
    return out;
}

bool verify_triple_product(const BilinearTriple& t) {
    std::vector<TripleParams> levels = t.level_params;
    if (levels.empty()) levels.push_back(t.params);
    std::uint64_t su = 1, st = 1, tu = 1, r = 1;
    for (const TripleParams& p : levels) {
        su *= static_cast<std::uint64_t>(p.s) * p.u;
        st *= static_cast<std::uint64_t>(p.s) * p.t;
        tu *= static_cast<std::uint64_t>(p.t) * p.u;
        r *= static_cast<std::uint64_t>(p.r);
    }
    if (t.zeta.rows != su || t.zeta.cols != r || t.xi.rows != r ||
        t.xi.cols != st || t.eta.rows != r || t.eta.cols != tu)
        throw std::invalid_argument("triple shape does not match params");

    // Decodes a composite index into per-level digit pairs and reports
    // whether the chosen component matches `other` at every level.
    auto digits = [&levels](std::uint64_t flat, auto radix, auto pick) {
        std::vector<int> out(levels.size());
        for (std::size_t l = levels.size(); l-- > 0;) {
            const std::uint64_t rad = radix(levels[l]);
            out[l] = pick(levels[l], static_cast<int>(flat % rad));
            flat /= rad;
        }
        return out;
    };

    for (std::uint64_t zr = 0; zr < su; ++zr) {
        const auto i_of_z = digits(zr,
            [](const TripleParams& p) { return std::uint64_t(p.s) * p.u; },
            [](const TripleParams& p, int d) { return d / p.u; });
        const auto k_of_z = digits(zr,
            [](const TripleParams& p) { return std::uint64_t(p.s) * p.u; },
            [](const TripleParams& p, int d) { (void)p; return d % p.u; });
        for (std::uint64_t xc = 0; xc < st; ++xc) {
            const auto i_of_x = digits(xc,
                [](const TripleParams& p) { return std::uint64_t(p.s) * p.t; },
                [](const TripleParams& p, int d) { return d / p.t; });
            const auto j_of_x = digits(xc,
                [](const TripleParams& p) { return std::uint64_t(p.s) * p.t; },
                [](const TripleParams& p, int d) { (void)p; return d % p.t; });
            for (std::uint64_t ec = 0; ec < tu; ++ec) {
                const auto j_of_e = digits(ec,
                    [](const TripleParams& p) { return std::uint64_t(p.t) * p.u; },
                    [](const TripleParams& p, int d) { return d / p.u; });
                const auto k_of_e = digits(ec,
                    [](const TripleParams& p) { return std::uint64_t(p.t) * p.u; },
                    [](const TripleParams& p, int d) { (void)p; return d % p.u; });
                const bool match = i_of_z == i_of_x && j_of_x == j_of_e &&
                                   k_of_e == k_of_z;
                unsigned sum = 0;
                for (std::uint64_t h = 0; h < r; ++h)
                    sum ^= t.zeta.get(zr, h) & t.xi.get(h, xc) & t.eta.get(h, ec);
                if (sum != static_cast<unsigned>(match)) return false;
            }
        }
    }
    return true;
}

BilinearTriple kronecker(const BilinearTriple& a, const BilinearTriple& b) {
    BilinearTriple out;
    out.zeta = kronecker(a.zeta, b.zeta);
    out.xi = kronecker(a.xi, b.xi);
    out.eta = kronecker(a.eta, b.eta);
    out.params = {a.params.s * b.params.s, a.params.t * b.params.t,
                  a.params.u * b.params.u, a.params.r * b.params.r};
    out.level_params = a.level_params.empty()
                           ? std::vector<TripleParams>{a.params}
                           : a.level_params;
    if (b.level_params.empty())
        out.level_params.push_back(b.params);
    else
        out.level_params.insert(out.level_params.end(), b.level_params.begin(),
                                b.level_params.end());
    return out;
}

BilinearTriple compose(const Decomposition& d) {
    BilinearTriple t;
    t.zeta = d.chi * d.gamma;
    t.xi = d.alpha * d.phi;
    t.eta = d.beta * d.psi;
    t.params = d.params;
    t.level_params = {d.params};
    return t;
}

const Decomposition& builtin(Builtin which) {
    static const Decomposition sw = make_strassen_winograd();
    static const Decomposition asi = make_alt_self_inverse();
    static const Decomposition ach = make_alt_chaining();
    static const Decomposition el = make_elementary();
    switch (which) {
        case Builtin::StrassenWinograd: return sw;
        case Builtin::AltSelfInverse: return asi;
        case Builtin::AltChaining: return ach;
        case Builtin::Elementary: return el;
    }
    throw std::invalid_argument("unknown builtin decomposition");
}

std::uint64_t predicted_additions(const Decomposition& d, int depth, CostPart part) {
    const TripleParams& p = d.params;
    if (p.s != p.t || p.t != p.u)
        throw std::invalid_argument("addition prediction needs s = t = u");
    const std::uint64_t s2 = static_cast<std::uint64_t>(p.s) * p.s;
    if (static_cast<std::uint64_t>(p.r) <= s2)
        throw std::invalid_argument("addition prediction needs r > s^2");
    if (depth < 0) throw std::invalid_argument("negative depth");
    if (depth == 0) return 0;
    if (part == CostPart::BasisChanges) {
        const std::uint64_t per_level = d.slp_phi.addition_count() +
                                        d.slp_psi.addition_count() +
                                        d.slp_chi.addition_count();
        return per_level * ipow(s2, depth - 1) * depth;
    }
    const std::uint64_t per_level = d.slp_alpha.addition_count() +
                                    d.slp_beta.addition_count() +
                                    d.slp_gamma.addition_count();
    std::uint64_t geometric = 0;
    for (int l = 0; l < depth; ++l)
        geometric += ipow(s2, l) * ipow(p.r, depth - 1 - l);
    return per_level * geometric;
}

} // namespace bmm
