#pragma once

// Minimal index-parallel loop: `jobs` threads pull indices from a shared counter. Every index
// is processed exactly once; results must be written to per-index slots so the outcome does
// not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace qjump {

// Runs fn(i) for i in [0, count) and returns the exception raised by each index (null when
// it succeeded).
template <class Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return errors;
}

}  // namespace qjump
