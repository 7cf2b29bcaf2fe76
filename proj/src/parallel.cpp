#include "sdesym/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>

namespace sdesym {

namespace {
std::atomic<int> g_threads{0};
}

int default_threads() {
    const int t = g_threads.load();
    if (t > 0) return t;
    return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(int threads) { g_threads.store(threads); }

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t, int)>& body) {
    if (threads <= 0) threads = default_threads();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        body(0, count, 0);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = count * w / workers;
        const std::size_t end = count * (w + 1) / workers;
        pool.emplace_back([&, begin, end, w] {
            try {
                body(begin, end, static_cast<int>(w));
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(const double* v, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += v[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, count - half);
}

}  // namespace sdesym
