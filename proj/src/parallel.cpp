#include "fbp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace fbp {

namespace {
std::atomic<int> g_limit{0};

int env_limit() {
    const char* env = std::getenv("FBP_THREADS");
    if (!env) return 0;
    int n = std::atoi(env);
    return n > 0 ? n : 0;
}
}  // namespace

void set_thread_limit(int n) { g_limit.store(n < 0 ? 0 : n); }

int thread_limit() {
    int n = g_limit.load();
    if (n == 0) n = env_limit();
    if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    int workers = static_cast<int>(std::min<int64_t>(thread_limit(), n));
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    for (int t = 0; t < workers; ++t) {
        int64_t begin = n * t / workers;
        int64_t end = n * (t + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(error);
}

}  // namespace fbp
