#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace bmm::detail {

// Splits [0, total) into at most `workers` contiguous ranges and runs
// fn(begin, end) for each, one thread per range, joining before return.
// Ranges are a static equal split, so identical calls always produce the
// same partition.
template <class F>
void parallel_ranges(std::uint64_t total, int workers, F&& fn) {
    const std::uint64_t parts =
        std::max<std::uint64_t>(1, std::min<std::uint64_t>(workers, total));
    if (parts == 1) {
        fn(std::uint64_t{0}, total);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(parts - 1);
    const std::uint64_t chunk = total / parts;
    const std::uint64_t extra = total % parts;
    std::uint64_t begin = 0;
    for (std::uint64_t k = 0; k < parts; ++k) {
        const std::uint64_t end = begin + chunk + (k < extra ? 1 : 0);
        if (k + 1 == parts)
            fn(begin, end);
        else
            threads.emplace_back([&fn, begin, end] { fn(begin, end); });
        begin = end;
    }
    for (std::thread& t : threads) t.join();
}

} // namespace bmm::detail
