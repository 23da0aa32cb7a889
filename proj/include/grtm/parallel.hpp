#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace grtm {

// Worker count: hardware concurrency, capped by the GRTM_THREADS environment variable.
inline int worker_count()
{
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("GRTM_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) {
                n = std::min(n, cap);
            }
        } catch (const std::exception&) {
            // ignore unparsable values
        }
    }
    return n;
}

// Runs body(i) for i in [0, count) over contiguous chunks. Each index is
// visited exactly once, so results written per index do not depend on the
// thread count. The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(int count, int threads, Body&& body)
{
    threads = std::clamp(threads, 1, std::max(1, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        const int chunk = (count + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(count, lo + chunk);
            pool.emplace_back([&, t, lo, hi] {
                try {
                    for (int i = lo; i < hi; ++i) {
                        body(i);
                    }
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace grtm
