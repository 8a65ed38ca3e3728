#include "mcrelab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mcrelab {

namespace {
std::atomic<int> g_default_threads{static_cast<int>(
    std::max(1u, std::thread::hardware_concurrency()))};
}

int default_threads() { return g_default_threads.load(); }

void set_default_threads(int n) { g_default_threads.store(std::max(1, n)); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                  int threads) {
    if (n <= 0) return;
    int workers = threads > 0 ? threads : default_threads();
    workers = static_cast<int>(std::min<std::int64_t>(workers, n));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    // Chunked dynamic scheduling; item ownership makes the schedule irrelevant
    // for the results.
    const std::int64_t chunk = std::max<std::int64_t>(1, n / (8 * workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t lo = next.fetch_add(chunk);
                if (lo >= n) break;
                const std::int64_t hi = std::min(n, lo + chunk);
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace mcrelab
