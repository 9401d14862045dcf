#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "bmm/bitmatrix.hpp"
#include "bmm/counter.hpp"
#include "bmm/decomposition.hpp"
#include "bmm/plan.hpp"

namespace bmm::pipeline {

// Index of one host-level sub-instance: digits h_1..h_{d_host}, each in
// [0, 7), first digit most significant. The owning worker is the flat
// index mod the worker count, so ownership is balanced within one.
struct SubInstanceIndex {
    std::vector<int> digits;

    std::uint64_t flat() const;
    int owner(int n_workers) const;
    static SubInstanceIndex from_flat(std::uint64_t flat, int d_host);
};

std::uint64_t sub_instance_count(const LayerPlan& plan);

// One mutex per host-level output subvector (4^d_host of them), with a
// tripwire that counts any overlapping holds. A nonzero count means the
// guarded-region contract was broken somewhere.
class SubvectorLocks {
  public:
    explicit SubvectorLocks(int d_host);
    ~SubvectorLocks();

    std::size_t size() const { return count_; }
    void lock(std::size_t index);
    void unlock(std::size_t index);
    std::uint64_t violations() const {
        return violations_.load(std::memory_order_relaxed);
    }

  private:
    struct Cell;
    std::size_t count_;
    std::unique_ptr<Cell[]> cells_;
    std::atomic<std::uint64_t> violations_{0};
};

// Per-sub-instance event counts from one coordinate() run; every entry of
// the three arrays must end up exactly 1.
struct PipelineStats {
    std::vector<std::uint64_t> prepared_left;
    std::vector<std::uint64_t> prepared_right;
    std::vector<std::uint64_t> aggregated;
    std::uint64_t lock_violations = 0;
};

// Left (right) input of sub-instance h: the XOR of exactly those host-level
// subvectors of a_hat (b_hat) whose alpha (beta) digit product is 1; zero
// terms are skipped entirely.
std::vector<std::uint64_t> generate_left(const BitVectorTensor& a_hat,
                                         const SubInstanceIndex& h,
                                         const Decomposition& d,
                                         const LayerPlan& plan,
                                         OpCounter* counter = nullptr);
std::vector<std::uint64_t> generate_right(const BitVectorTensor& b_hat,
                                          const SubInstanceIndex& h,
                                          const Decomposition& d,
                                          const LayerPlan& plan,
                                          OpCounter* counter = nullptr);

// XORs the solved sub-result q into every output subvector whose gamma
// digit product is 1, taking that subvector's lock around the update.
void aggregate(BitVectorTensor& c_hat, const SubInstanceIndex& h,
               const std::vector<std::uint64_t>& q, const Decomposition& d,
               const LayerPlan& plan, SubvectorLocks& locks,
               OpCounter* counter = nullptr);

// Runs the host layer: 7^d_host sub-instances streamed through n_workers
// emulated accelerators, four stage threads per worker (prepare-left,
// prepare-right, solve, aggregate) handing off through Free/Occupied
// buffers. The solve stage copies its inputs out and frees both buffers
// before multiplying, so preparation of the next sub-instance overlaps the
// current product. Output equals the sequential reference bit for bit.
BitVectorTensor coordinate(const BitVectorTensor& a_hat,
                           const BitVectorTensor& b_hat,
                           const Decomposition& d, const LayerPlan& plan,
                           int n_workers, OpCounter* counter = nullptr,
                           PipelineStats* stats = nullptr);

} // namespace bmm::pipeline
