#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "bmm/bitmatrix.hpp"
#include "bmm/counter.hpp"
#include "bmm/decomposition.hpp"
#include "bmm/engine.hpp"
#include "bmm/pipeline.hpp"
#include "bmm/plan.hpp"

using namespace bmm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point t0, Clock::time_point t1) {
    return std::chrono::duration<double>(t1 - t0).count();
}

Builtin builtin_from_name(const std::string& name) {
    if (name == "sw") return Builtin::StrassenWinograd;
    if (name == "alt-si") return Builtin::AltSelfInverse;
    if (name == "alt-chain") return Builtin::AltChaining;
    if (name == "elementary") return Builtin::Elementary;
    throw std::invalid_argument("unknown decomposition: " + name);
}

Algo algo_from_name(const std::string& name) {
    if (name == "cubic" || name == "boolean-cubic") return Algo::Cubic;
    if (name == "sw") return Algo::StrassenWinograd;
    if (name == "alt-si") return Algo::AltSelfInverse;
    if (name == "alt-chain") return Algo::AltChaining;
    throw std::invalid_argument("unknown algorithm: " + name);
}

int resolve_workers(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("BMM_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 65536)
            return static_cast<int>(v);
        std::cerr << "ignoring unusable BMM_WORKERS value \"" << env << "\"\n";
    }
    return 1;
}

struct PlanFlags {
    int d_host = 0;
    int d_serial = 0;
    int d_parallel = 0;
    bool any_given = false;
};

LayerPlan resolve_plan(const PlanFlags& flags, std::uint64_t n, Algo algo,
                       int workers) {
    LayerPlan plan;
    if (algo != Algo::Cubic) {
        if (flags.any_given) {
            plan.d_host = flags.d_host;
            plan.d_serial = flags.d_serial;
            plan.d_parallel = flags.d_parallel;
        } else {
            plan = LayerPlan::auto_plan(n, workers);
        }
    }
    plan.workers = workers;
    return plan;
}

void require_sound_ring(Algo algo, Semiring ring) {
    if (algo != Algo::Cubic && ring == Semiring::BooleanOrAnd)
        throw std::invalid_argument(
            "the Boolean semiring has no subtraction, so cancellation-based "
            "fast algorithms are unsound over it; use the cubic algorithm");
}

// Runs one product and reports the wall time of the requested span: the
// recursive core only, or transforms plus core when include_transforms is
// set. File I/O never counts either way.
BitMatrix run_product(const BitMatrix& a, const BitMatrix& b, Algo algo,
                      Semiring ring, const LayerPlan& plan,
                      bool include_transforms, OpCounter* counter,
                      double* seconds) {
    if (algo == Algo::Cubic) {
        const auto t0 = Clock::now();
        BitMatrix c = multiply_cubic(a, b, ring, plan.workers, counter);
        *seconds = seconds_between(t0, Clock::now());
        return c;
    }
    require_sound_ring(algo, ring);
    if (a.rows != a.cols || b.rows != b.cols || a.rows != b.rows)
        throw ShapeError("fast algorithms need equal square operands");
    if (a.rows < 64 || !std::has_single_bit(a.rows))
        throw ShapeError("fast algorithms need n = 64 * 2^k");
    if (plan.matrix_dim() != a.rows)
        throw std::invalid_argument("layer plan does not match the operands");
    const Decomposition& d = decomposition_for(algo);
    const auto t0 = Clock::now();
    BitVectorTensor a_hat = to_interleaved(a, plan, Operand::Left);
    BitVectorTensor b_hat = to_interleaved(b, plan, Operand::Right);
    basis_change(a_hat, d, BasisFactor::Phi, plan.depth(), plan.workers,
                 counter);
    basis_change(b_hat, d, BasisFactor::Psi, plan.depth(), plan.workers,
                 counter);
    const auto t1 = Clock::now();
    BitVectorTensor c_hat =
        plan.d_host > 0
            ? pipeline::coordinate(a_hat, b_hat, d, plan, plan.workers, counter)
            : multiply_alt(a_hat, b_hat, d, plan, counter);
    const auto t2 = Clock::now();
    basis_change(c_hat, d, BasisFactor::Chi, plan.depth(), plan.workers,
                 counter);
    BitMatrix c = from_interleaved(c_hat, plan, Operand::Result);
    const auto t3 = Clock::now();
    *seconds = include_transforms ? seconds_between(t0, t3)
                                  : seconds_between(t1, t2);
    return c;
}

// Effective throughput always uses the elementary operation count for the
// product shape, (2k-1) bit operations per output bit, whatever algorithm
// actually ran.
double effective_bops(std::uint64_t rows, std::uint64_t inner,
                      std::uint64_t cols, double seconds) {
    const double ops = 2.0 * static_cast<double>(rows) *
                           static_cast<double>(inner) *
                           static_cast<double>(cols) -
                       static_cast<double>(rows) * static_cast<double>(cols);
    return seconds > 0.0 ? ops / seconds : 0.0;
}

void print_report(const std::string& algo, std::uint64_t n,
                  const LayerPlan& plan, double seconds, double bops,
                  const OpCounter& counter) {
    nlohmann::json report;
    report["algo"] = algo;
    report["n"] = n;
    report["d_host"] = plan.d_host;
    report["d_serial"] = plan.d_serial;
    report["d_parallel"] = plan.d_parallel;
    report["workers"] = plan.workers;
    report["wall_time_seconds"] = seconds;
    report["effective_bops"] = bops;
    report["kernel_invocations"] = counter.kernel_invocations.load();
    report["word_xor_count"] = counter.word_xors.load();
    std::cout << report.dump() << "\n";
}

std::vector<std::uint64_t> dense_apply(const Gf2Matrix& m,
                                       const std::vector<std::uint64_t>& in) {
    std::vector<std::uint64_t> out(m.rows, 0);
    for (std::uint64_t i = 0; i < m.rows; ++i)
        for (std::uint64_t j = 0; j < m.cols; ++j)
            if (m.get(i, j)) out[i] ^= in[j];
    return out;
}

bool slp_matches(const StraightLineProgram& slp, const Gf2Matrix& m) {
    if (static_cast<std::uint64_t>(slp.input_arity) != m.cols ||
        static_cast<std::uint64_t>(slp.output_arity) != m.rows)
        return false;
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        std::vector<std::uint64_t> in(m.cols);
        for (std::uint64_t& w : in) w = rng();
        if (slp_eval(slp, in) != dense_apply(m, in)) return false;
    }
    for (std::uint64_t j = 0; j < m.cols; ++j) {
        std::vector<std::uint64_t> in(m.cols, 0);
        in[j] = ~std::uint64_t{0};
        if (slp_eval(slp, in) != dense_apply(m, in)) return false;
    }
    return true;
}

std::string weight_text(const std::vector<std::uint64_t>& weights) {
    std::string s = "[";
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(weights[i]);
    }
    return s + "]";
}

int cmd_gen(std::uint64_t n, std::uint64_t rows, std::uint64_t cols,
            std::uint32_t seed, const std::string& out_path) {
    if (n > 0 && (rows > 0 || cols > 0))
        throw std::invalid_argument("give either -n or --rows/--cols, not both");
    if (n > 0) {
        rows = n;
        cols = n;
    }
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("matrix dimensions must be positive");
    write_bmm1(BitMatrix::random(rows, cols, seed), out_path);
    return 0;
}

int cmd_transform(const std::string& in_path, const std::string& out_path,
                  bool transpose, const std::string& basis_name, bool inverse,
                  int workers) {
    if (transpose == !basis_name.empty())
        throw std::invalid_argument(
            "pick exactly one of --transpose64 and --basis");
    BitMatrix m = read_bmm1(in_path);
    if (transpose) {
        transpose_blocks64(m);
        write_bmm1(m, out_path);
        return 0;
    }
    const Decomposition& d = builtin(builtin_from_name(basis_name));
    const LayerPlan plan = LayerPlan::auto_plan(m.rows, workers);
    if (m.cols != m.rows)
        throw ShapeError("basis changes need a square matrix");
    const BasisFactor factor =
        inverse ? (d.traits.self_inverse_bases ? BasisFactor::Phi
                                               : BasisFactor::Chi)
                : BasisFactor::Phi;
    BitVectorTensor t = to_interleaved(m, plan, Operand::Left);
    basis_change(t, d, factor, plan.depth(), plan.workers);
    write_bmm1(from_interleaved(t, plan, Operand::Left), out_path);
    return 0;
}

int cmd_multiply(const std::vector<std::string>& inputs,
                 const std::string& out_path, const std::string& algo_name,
                 Semiring ring, const PlanFlags& flags, int workers,
                 bool include_transforms) {
    const Algo algo = algo_from_name(algo_name);
    require_sound_ring(algo, ring);
    const BitMatrix a = read_bmm1(inputs[0]);
    const BitMatrix b = read_bmm1(inputs[1]);
    const LayerPlan plan = resolve_plan(flags, a.rows, algo, workers);

    OpCounter counter;
    double seconds = 0.0;
    const BitMatrix c = run_product(a, b, algo, ring, plan, include_transforms,
                                    &counter, &seconds);
    write_bmm1(c, out_path);
    print_report(algo_name, a.rows, plan, seconds,
                 effective_bops(a.rows, a.cols, b.cols, seconds), counter);
    return 0;
}

int cmd_bench(std::uint64_t n, std::uint32_t seed, const std::string& algo_name,
              Semiring ring, const PlanFlags& flags, int workers, int repeats,
              bool check, bool include_transforms) {
    if (repeats < 1) throw std::invalid_argument("need at least one repeat");
    const Algo algo = algo_from_name(algo_name);
    require_sound_ring(algo, ring);
    const BitMatrix a = BitMatrix::random(n, n, seed);
    const BitMatrix b = BitMatrix::random(n, n, seed + 1);
    const LayerPlan plan = resolve_plan(flags, n, algo, workers);

    std::vector<double> times;
    OpCounter counter;
    BitMatrix c = BitMatrix::zeros(1, 1);
    for (int r = 0; r < repeats; ++r) {
        counter.reset();
        double seconds = 0.0;
        c = run_product(a, b, algo, ring, plan, include_transforms, &counter,
                        &seconds);
        times.push_back(seconds);
    }
    std::sort(times.begin(), times.end());
    const double median =
        repeats % 2 ? times[repeats / 2]
                    : 0.5 * (times[repeats / 2 - 1] + times[repeats / 2]);
    print_report(algo_name, n, plan, median, effective_bops(n, n, n, median),
                 counter);

    if (check) {
        const BitMatrix want = multiply_cubic(a, b, ring, plan.workers);
        if (!(c == want)) {
            std::cerr << "check failed: output differs from the cubic product\n";
            return 4;
        }
        std::cerr << "check passed: output matches the cubic product\n";
    }
    return 0;
}

int cmd_verify(const std::string& name, bool dump) {
    const Decomposition& d = builtin(builtin_from_name(name));
    bool ok = true;
    auto report = [&ok](const std::string& what, bool pass) {
        std::cout << (pass ? "pass  " : "FAIL  ") << what << "\n";
        if (!pass) ok = false;
    };

    report("triple product over GF(2)", verify_triple_product(compose(d)));
    if (d.traits.self_inverse_bases)
        report("self-inverse bases", check_self_inverse(d.phi) &&
                                         check_self_inverse(d.psi) &&
                                         check_self_inverse(d.chi));
    if (d.traits.supports_chaining)
        report("chaining bases (psi = phi, chi undoes phi)",
               d.psi == d.phi && check_mutual_inverse(d.phi, d.chi));

    const auto wa = weight_distribution(d.alpha, WeightAxis::Rows);
    const auto wb = weight_distribution(d.beta, WeightAxis::Rows);
    const auto wg = weight_distribution(d.gamma, WeightAxis::Cols);
    std::cout << "      operand weights " << weight_text(wa) << " / "
              << weight_text(wb) << "\n";
    std::cout << "      result weights  " << weight_text(wg) << "\n";
    const std::vector<std::uint64_t> lean = {1, 1, 1, 1, 2, 2, 2};
    const std::vector<std::uint64_t> chain_out = {1, 1, 1, 1, 2, 3, 3};
    if (name == "alt-si")
        report("weight multisets", wa == lean && wb == lean && wg == lean);
    if (name == "alt-chain")
        report("weight multisets", wa == lean && wb == lean && wg == chain_out);

    report("programs match their matrices",
           slp_matches(d.slp_alpha, d.alpha) && slp_matches(d.slp_beta, d.beta) &&
               slp_matches(d.slp_gamma, d.gamma) &&
               slp_matches(d.slp_phi, d.phi) && slp_matches(d.slp_psi, d.psi) &&
               slp_matches(d.slp_chi, d.chi));

    const std::uint64_t combine = d.slp_alpha.addition_count() +
                                  d.slp_beta.addition_count() +
                                  d.slp_gamma.addition_count();
    const std::uint64_t basis = d.slp_phi.addition_count() +
                                d.slp_psi.addition_count() +
                                d.slp_chi.addition_count();
    std::cout << "      additions: combine " << combine << ", basis " << basis
              << "\n";
    if (name == "sw") report("addition counts", combine == 15 && basis == 0);
    if (name == "alt-si" || name == "alt-chain")
        report("addition counts",
               d.slp_alpha.addition_count() == 3 &&
                   d.slp_beta.addition_count() == 3 &&
                   d.slp_gamma.addition_count() == 6 &&
                   d.slp_phi.addition_count() == 2 &&
                   d.slp_psi.addition_count() == 2 &&
                   d.slp_chi.addition_count() == 2);

    if (dump) {
        const struct {
            const char* label;
            const Gf2Matrix* m;
        } parts[] = {{"alpha", &d.alpha}, {"beta", &d.beta},
                     {"gamma", &d.gamma}, {"phi", &d.phi},
                     {"psi", &d.psi},     {"chi", &d.chi}};
        for (const auto& part : parts)
            std::cout << part.label << "\n" << to_text(*part.m) << "\n";
    }

    std::cout << (ok ? "all checks passed" : "checks FAILED") << "\n";
    return ok ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bit-matrix products over GF(2) and the Boolean semiring"};
    app.require_subcommand(1);
    const std::vector<std::string> algo_names = {"cubic", "boolean-cubic", "sw",
                                                 "alt-si", "alt-chain"};
    const std::vector<std::string> basis_names = {"sw", "alt-si", "alt-chain",
                                                  "elementary"};

    auto* gen = app.add_subcommand("gen", "Write a seeded random matrix");
    std::uint64_t gen_n = 0, gen_rows = 0, gen_cols = 0;
    std::uint32_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("-n", gen_n, "Square dimension");
    gen->add_option("--rows", gen_rows, "Row count");
    gen->add_option("--cols", gen_cols, "Column count");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("-o,--out", gen_out, "Output file")->required();

    auto* transform =
        app.add_subcommand("transform", "Rewrite a matrix file in place of "
                                        "multiplying: 64x64 block transpose "
                                        "or a basis change");
    std::string tr_in, tr_out, tr_basis;
    bool tr_transpose = false, tr_forward = false, tr_inverse = false;
    int tr_workers = 0;
    transform->add_option("-i,--in", tr_in, "Input file")->required();
    transform->add_option("-o,--out", tr_out, "Output file")->required();
    transform->add_flag("--transpose64", tr_transpose,
                        "Transpose every aligned 64x64 block");
    transform->add_option("--basis", tr_basis, "Apply this scheme's operand basis")
        ->check(CLI::IsMember(basis_names));
    auto* fwd = transform->add_flag("--forward", tr_forward,
                                    "Apply the basis change (default)");
    transform->add_flag("--inverse", tr_inverse, "Undo the basis change")
        ->excludes(fwd);
    transform->add_option("--workers", tr_workers, "Worker threads");

    auto* multiply = app.add_subcommand("multiply", "Multiply two matrix files");
    std::vector<std::string> mul_in;
    std::string mul_out, mul_algo = "cubic", mul_ring = "gf2";
    PlanFlags mul_plan;
    int mul_workers = 0;
    bool mul_include = false;
    multiply->add_option("--in", mul_in, "Left and right input files")
        ->expected(2)
        ->required();
    multiply->add_option("-o,--out", mul_out, "Output file")->required();
    multiply->add_option("--algo", mul_algo, "Algorithm")
        ->check(CLI::IsMember(algo_names));
    auto* mul_ring_opt = multiply->add_option("--ring", mul_ring, "Semiring")
                             ->check(CLI::IsMember({"gf2", "boolean"}));
    auto* mh = multiply->add_option("--d-host", mul_plan.d_host,
                                    "Pipelined recursion levels");
    auto* ms = multiply->add_option("--d-serial", mul_plan.d_serial,
                                    "Serial recursion levels");
    auto* mp = multiply->add_option("--d-parallel", mul_plan.d_parallel,
                                    "Thread-parallel recursion levels");
    multiply->add_option("--workers", mul_workers, "Worker threads");
    multiply->add_flag("--include-transforms", mul_include,
                       "Count interleaving and basis changes in the timing");

    auto* bench = app.add_subcommand(
        "bench", "Time a product on seeded random inputs, median of repeats");
    std::uint64_t bench_n = 0;
    std::uint32_t bench_seed = 1;
    std::string bench_algo = "cubic", bench_ring = "gf2";
    PlanFlags bench_plan;
    int bench_workers = 0, bench_repeats = 5;
    bool bench_check = false, bench_include = false;
    bench->add_option("-n", bench_n, "Square dimension")->required();
    bench->add_option("--seed", bench_seed, "Generator seed");
    bench->add_option("--algo", bench_algo, "Algorithm")
        ->check(CLI::IsMember(algo_names));
    auto* bench_ring_opt = bench->add_option("--ring", bench_ring, "Semiring")
                               ->check(CLI::IsMember({"gf2", "boolean"}));
    auto* bh = bench->add_option("--d-host", bench_plan.d_host,
                                 "Pipelined recursion levels");
    auto* bs = bench->add_option("--d-serial", bench_plan.d_serial,
                                 "Serial recursion levels");
    auto* bp = bench->add_option("--d-parallel", bench_plan.d_parallel,
                                 "Thread-parallel recursion levels");
    bench->add_option("--workers", bench_workers, "Worker threads");
    bench->add_option("--repeats", bench_repeats, "Timed repetitions");
    bench->add_flag("--check", bench_check,
                    "Compare the output against the cubic product");
    bench->add_flag("--include-transforms", bench_include,
                    "Count interleaving and basis changes in the timing");

    auto* verify = app.add_subcommand(
        "verify", "Run the property suite for a builtin scheme");
    std::string verify_name;
    bool verify_dump = false;
    verify->add_option("--decomposition", verify_name, "Scheme name")
        ->check(CLI::IsMember(basis_names))
        ->required();
    verify->add_flag("--dump", verify_dump, "Print the coefficient matrices");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed())
            return cmd_gen(gen_n, gen_rows, gen_cols, gen_seed, gen_out);
        if (transform->parsed())
            return cmd_transform(tr_in, tr_out, tr_transpose, tr_basis,
                                 tr_inverse, resolve_workers(tr_workers));
        if (multiply->parsed()) {
            mul_plan.any_given = *mh || *ms || *mp;
            const Semiring ring = (mul_algo == "boolean-cubic" &&
                                   mul_ring_opt->count() == 0) ||
                                          mul_ring == "boolean"
                                      ? Semiring::BooleanOrAnd
                                      : Semiring::Gf2XorAnd;
            if (mul_algo == "boolean-cubic" && ring == Semiring::Gf2XorAnd)
                throw std::invalid_argument(
                    "boolean-cubic runs on the Boolean semiring; drop --ring");
            return cmd_multiply(mul_in, mul_out, mul_algo, ring, mul_plan,
                                resolve_workers(mul_workers), mul_include);
        }
        if (bench->parsed()) {
            bench_plan.any_given = *bh || *bs || *bp;
            const Semiring ring = (bench_algo == "boolean-cubic" &&
                                   bench_ring_opt->count() == 0) ||
                                          bench_ring == "boolean"
                                      ? Semiring::BooleanOrAnd
                                      : Semiring::Gf2XorAnd;
            if (bench_algo == "boolean-cubic" && ring == Semiring::Gf2XorAnd)
                throw std::invalid_argument(
                    "boolean-cubic runs on the Boolean semiring; drop --ring");
            return cmd_bench(bench_n, bench_seed, bench_algo, ring, bench_plan,
                             resolve_workers(bench_workers), bench_repeats,
                             bench_check, bench_include);
        }
        if (verify->parsed()) return cmd_verify(verify_name, verify_dump);
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
