#include "bmm/pipeline.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bmm/engine.hpp"

namespace bmm::pipeline {

std::uint64_t SubInstanceIndex::flat() const {
    std::uint64_t f = 0;
    for (int digit : digits) f = f * 7 + static_cast<std::uint64_t>(digit);
    return f;
}

int SubInstanceIndex::owner(int n_workers) const {
    if (n_workers < 1) throw std::invalid_argument("need at least one worker");
    return static_cast<int>(flat() % static_cast<std::uint64_t>(n_workers));
}

SubInstanceIndex SubInstanceIndex::from_flat(std::uint64_t flat, int d_host) {
    SubInstanceIndex h;
    h.digits.assign(d_host, 0);
    for (int l = d_host; l-- > 0;) {
        h.digits[l] = static_cast<int>(flat % 7);
        flat /= 7;
    }
    return h;
}

std::uint64_t sub_instance_count(const LayerPlan& plan) {
    std::uint64_t n = 1;
    for (int l = 0; l < plan.d_host; ++l) n *= 7;
    return n;
}

struct SubvectorLocks::Cell {
    std::mutex m;
    std::atomic<bool> held{false};
};

SubvectorLocks::~SubvectorLocks() = default;

SubvectorLocks::SubvectorLocks(int d_host) {
    if (d_host < 0) throw std::invalid_argument("negative host level count");
    count_ = std::size_t{1} << (2 * d_host);
    cells_ = std::make_unique<Cell[]>(count_);
}

void SubvectorLocks::lock(std::size_t index) {
    Cell& cell = cells_[index];
    cell.m.lock();
    if (cell.held.exchange(true, std::memory_order_relaxed))
        violations_.fetch_add(1, std::memory_order_relaxed);
}

void SubvectorLocks::unlock(std::size_t index) {
    Cell& cell = cells_[index];
    cell.held.store(false, std::memory_order_relaxed);
    cell.m.unlock();
}

namespace {

// Digit product over the host levels: coefficient of source combination g
// (base-4 digits, most significant first) in sub-instance h's combination.
bool digit_product(const Gf2Matrix& m, const std::vector<int>& h_digits,
                   std::uint64_t g) {
    for (std::size_t l = h_digits.size(); l-- > 0;) {
        if (!m.get(static_cast<std::uint64_t>(h_digits[l]), g & 3)) return false;
        g >>= 2;
    }
    return true;
}

// Same product with the roles flipped: rows of m are indexed by the base-4
// digits of g, columns by the sub-instance digits.
bool digit_product_out(const Gf2Matrix& m, const std::vector<int>& h_digits,
                       std::uint64_t g) {
    for (std::size_t l = h_digits.size(); l-- > 0;) {
        if (!m.get(g & 3, static_cast<std::uint64_t>(h_digits[l]))) return false;
        g >>= 2;
    }
    return true;
}

void check_digits(const std::vector<int>& digits, const LayerPlan& plan) {
    if (digits.size() != static_cast<std::size_t>(plan.d_host))
        throw std::invalid_argument("sub-instance index depth mismatch");
    for (int digit : digits)
        if (digit < 0 || digit > 6)
            throw std::invalid_argument("sub-instance digit out of range");
}

void check_interleaved(const BitVectorTensor& v, const LayerPlan& plan) {
    std::vector<std::uint64_t> want(plan.depth(), 4);
    want.push_back(kBlockBits);
    if (v.mode_lengths != want)
        throw std::invalid_argument("vector is not interleaved for this plan");
    if (v.words.size() * kWordBits != v.bit_length())
        throw std::invalid_argument("vector storage does not match its modes");
}

void generate_into(const BitVectorTensor& src, const Gf2Matrix& m,
                   const std::vector<int>& h_digits, std::uint64_t* out,
                   std::uint64_t inner_words, OpCounter* counter) {
    const std::uint64_t combos = std::uint64_t{1} << (2 * h_digits.size());
    bool first = true;
    std::uint64_t folds = 0;
    for (std::uint64_t g = 0; g < combos; ++g) {
        if (!digit_product(m, h_digits, g)) continue;
        const std::uint64_t* s = src.words.data() + g * inner_words;
        if (first) {
            std::copy(s, s + inner_words, out);
            first = false;
        } else {
            for (std::uint64_t w = 0; w < inner_words; ++w) out[w] ^= s[w];
            ++folds;
        }
    }
    if (first) std::fill(out, out + inner_words, 0);
    if (counter && folds) counter->add_xors(folds * inner_words);
}

} // namespace

std::vector<std::uint64_t> generate_left(const BitVectorTensor& a_hat,
                                         const SubInstanceIndex& h,
                                         const Decomposition& d,
                                         const LayerPlan& plan,
                                         OpCounter* counter) {
    check_digits(h.digits, plan);
    check_interleaved(a_hat, plan);
    const std::uint64_t inner_words = a_hat.words.size() >> (2 * plan.d_host);
    std::vector<std::uint64_t> out(inner_words);
    generate_into(a_hat, d.alpha, h.digits, out.data(), inner_words, counter);
    return out;
}

std::vector<std::uint64_t> generate_right(const BitVectorTensor& b_hat,
                                          const SubInstanceIndex& h,
                                          const Decomposition& d,
                                          const LayerPlan& plan,
                                          OpCounter* counter) {
    check_digits(h.digits, plan);
    check_interleaved(b_hat, plan);
    const std::uint64_t inner_words = b_hat.words.size() >> (2 * plan.d_host);
    std::vector<std::uint64_t> out(inner_words);
    generate_into(b_hat, d.beta, h.digits, out.data(), inner_words, counter);
    return out;
}

void aggregate(BitVectorTensor& c_hat, const SubInstanceIndex& h,
               const std::vector<std::uint64_t>& q, const Decomposition& d,
               const LayerPlan& plan, SubvectorLocks& locks,
               OpCounter* counter) {
    check_digits(h.digits, plan);
    check_interleaved(c_hat, plan);
    const std::uint64_t inner_words = c_hat.words.size() >> (2 * plan.d_host);
    if (q.size() != inner_words)
        throw std::invalid_argument("sub-result length does not match the plan");
    const std::uint64_t combos = std::uint64_t{1} << (2 * plan.d_host);
    if (locks.size() != combos)
        throw std::invalid_argument("lock array does not match the plan");
    std::uint64_t folds = 0;
    for (std::uint64_t g = 0; g < combos; ++g) {
        if (!digit_product_out(d.gamma, h.digits, g)) continue;
        locks.lock(g);
        std::uint64_t* dst = c_hat.words.data() + g * inner_words;
        for (std::uint64_t w = 0; w < inner_words; ++w) dst[w] ^= q[w];
        locks.unlock(g);
        ++folds;
    }
    if (counter && folds) counter->add_xors(folds * inner_words);
}

namespace {

// One emulated accelerator: three rendezvous buffers between the four
// stage threads. A producer may fill a buffer only while its flag is
// false and flips it under the mutex once done; the consumer does the
// reverse. Each flag is single-producer single-consumer.
struct Worker {
    std::mutex m;
    std::condition_variable cv;
    bool t_occupied = false;
    bool s_occupied = false;
    bool q_occupied = false;
    std::vector<std::uint64_t> t_buf, s_buf, q_buf;
};

} // namespace

BitVectorTensor coordinate(const BitVectorTensor& a_hat,
                           const BitVectorTensor& b_hat,
                           const Decomposition& d, const LayerPlan& plan,
                           int n_workers, OpCounter* counter,
                           PipelineStats* stats) {
    if (n_workers < 1) throw std::invalid_argument("need at least one worker");
    if (plan.d_host < 0 || plan.d_serial < 0 || plan.d_parallel < 0 ||
        plan.d_inner != 1)
        throw std::invalid_argument("invalid layer plan");
    check_interleaved(a_hat, plan);
    check_interleaved(b_hat, plan);

    const int d_host = plan.d_host;
    const std::uint64_t subs = sub_instance_count(plan);
    const std::uint64_t inner_words = a_hat.words.size() >> (2 * d_host);
    const std::uint64_t n = static_cast<std::uint64_t>(n_workers);

    BitVectorTensor c_hat;
    c_hat.mode_lengths = a_hat.mode_lengths;
    c_hat.words.assign(a_hat.words.size(), 0);

    SubvectorLocks locks(d_host);
    PipelineStats run_stats;
    run_stats.prepared_left.assign(subs, 0);
    run_stats.prepared_right.assign(subs, 0);
    run_stats.aggregated.assign(subs, 0);

    LayerPlan sub_plan;
    sub_plan.d_serial = plan.d_serial;
    sub_plan.d_parallel = plan.d_parallel;
    sub_plan.workers = 1;

    std::vector<std::uint64_t> sub_modes(plan.depth() - d_host, 4);
    sub_modes.push_back(kBlockBits);

    std::vector<std::unique_ptr<Worker>> workers;
    workers.reserve(n);
    for (std::uint64_t l = 0; l < n; ++l) {
        workers.push_back(std::make_unique<Worker>());
        workers.back()->t_buf.resize(inner_words);
        workers.back()->s_buf.resize(inner_words);
        workers.back()->q_buf.resize(inner_words);
    }

    std::atomic<bool> failed{false};
    std::vector<std::exception_ptr> errors(4 * n);
    auto abort_all = [&] {
        failed.store(true);
        for (auto& w : workers) w->cv.notify_all();
    };

    auto prepare_left = [&](std::uint64_t l) {
        Worker& w = *workers[l];
        for (std::uint64_t f = l; f < subs; f += n) {
            const SubInstanceIndex h = SubInstanceIndex::from_flat(f, d_host);
            {
                std::unique_lock lk(w.m);
                w.cv.wait(lk, [&] { return !w.t_occupied || failed.load(); });
            }
            if (failed.load()) return;
            generate_into(a_hat, d.alpha, h.digits, w.t_buf.data(), inner_words,
                          counter);
            ++run_stats.prepared_left[f];
            {
                std::lock_guard lk(w.m);
                w.t_occupied = true;
            }
            w.cv.notify_all();
        }
    };

    auto prepare_right = [&](std::uint64_t l) {
        Worker& w = *workers[l];
        for (std::uint64_t f = l; f < subs; f += n) {
            const SubInstanceIndex h = SubInstanceIndex::from_flat(f, d_host);
            {
                std::unique_lock lk(w.m);
                w.cv.wait(lk, [&] { return !w.s_occupied || failed.load(); });
            }
            if (failed.load()) return;
            generate_into(b_hat, d.beta, h.digits, w.s_buf.data(), inner_words,
                          counter);
            ++run_stats.prepared_right[f];
            {
                std::lock_guard lk(w.m);
                w.s_occupied = true;
            }
            w.cv.notify_all();
        }
    };

    auto solve = [&](std::uint64_t l) {
        Worker& w = *workers[l];
        BitVectorTensor t_sub, s_sub;
        t_sub.mode_lengths = sub_modes;
        s_sub.mode_lengths = sub_modes;
        for (std::uint64_t f = l; f < subs; f += n) {
            {
                std::unique_lock lk(w.m);
                w.cv.wait(lk, [&] {
                    return (w.t_occupied && w.s_occupied) || failed.load();
                });
            }
            if (failed.load()) return;
            t_sub.words = w.t_buf;
            s_sub.words = w.s_buf;
            {
                std::lock_guard lk(w.m);
                w.t_occupied = false;
                w.s_occupied = false;
            }
            w.cv.notify_all();
            BitVectorTensor q = multiply_alt(t_sub, s_sub, d, sub_plan, counter);
            {
                std::unique_lock lk(w.m);
                w.cv.wait(lk, [&] { return !w.q_occupied || failed.load(); });
            }
            if (failed.load()) return;
            w.q_buf = std::move(q.words);
            {
                std::lock_guard lk(w.m);
                w.q_occupied = true;
            }
            w.cv.notify_all();
        }
    };

    auto aggregate_stage = [&](std::uint64_t l) {
        Worker& w = *workers[l];
        for (std::uint64_t f = l; f < subs; f += n) {
            const SubInstanceIndex h = SubInstanceIndex::from_flat(f, d_host);
            {
                std::unique_lock lk(w.m);
                w.cv.wait(lk, [&] { return w.q_occupied || failed.load(); });
            }
            if (failed.load()) return;
            aggregate(c_hat, h, w.q_buf, d, plan, locks, counter);
            ++run_stats.aggregated[f];
            {
                std::lock_guard lk(w.m);
                w.q_occupied = false;
            }
            w.cv.notify_all();
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(4 * n);
    auto launch = [&](std::uint64_t slot, auto stage, std::uint64_t l) {
        threads.emplace_back([&, stage, slot, l] {
            try {
                stage(l);
            } catch (...) {
                errors[slot] = std::current_exception();
                abort_all();
            }
        });
    };
    for (std::uint64_t l = 0; l < n; ++l) {
        launch(4 * l + 0, prepare_left, l);
        launch(4 * l + 1, prepare_right, l);
        launch(4 * l + 2, solve, l);
        launch(4 * l + 3, aggregate_stage, l);
    }
    for (std::thread& t : threads) t.join();
    for (std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    run_stats.lock_violations = locks.violations();
    if (stats) *stats = std::move(run_stats);
    return c_hat;
}

} // namespace bmm::pipeline
