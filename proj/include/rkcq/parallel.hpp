#ifndef RKCQ_PARALLEL_HPP
#define RKCQ_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rkcq {

/// Worker cap from RKCQ_THREADS (0 or unset = serial).
inline unsigned configured_threads()
{
    const char* env = std::getenv("RKCQ_THREADS");
    if (env == nullptr) {
        return 0;
    }
    try {
        const long v = std::stol(env);
        return v > 0 ? static_cast<unsigned>(v) : 0u;
    } catch (...) {
        return 0;
    }
}

/// Runs body(i) for i in [0, n) on up to `threads` workers using static
/// contiguous chunks. Each index must write only its own output slot, so
/// results do not depend on scheduling. The first exception (lowest chunk)
/// is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body)
{
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                const std::size_t begin = n * w / workers;
                const std::size_t end = n * (w + 1) / workers;
                try {
                    for (std::size_t i = begin; i < end; ++i) {
                        body(i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace rkcq

#endif // RKCQ_PARALLEL_HPP
