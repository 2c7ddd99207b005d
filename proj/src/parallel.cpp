#include "hullstereo/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace hullstereo {

namespace {
int g_thread_count = 0; // 0 = unresolved

int resolve_default() {
    if (const char* env = std::getenv("HULLSTEREO_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
} // namespace

void set_thread_count(int n) { g_thread_count = n < 1 ? 0 : n; }

int thread_count() {
    if (g_thread_count >= 1) return g_thread_count;
    return resolve_default();
}

void parallel_chunks(int n, const std::function<void(int, int)>& fn) {
    if (n <= 0) return;
    int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    // Static contiguous split; chunk boundaries depend only on n and workers.
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    int base = n / workers, rem = n % workers;
    int begin = 0;
    for (int w = 0; w < workers; ++w) {
        int len = base + (w < rem ? 1 : 0);
        int end = begin + len;
        if (w + 1 == workers) {
            fn(begin, end);
        } else {
            pool.emplace_back([&fn, begin, end] { fn(begin, end); });
        }
        begin = end;
    }
    for (auto& t : pool) t.join();
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    parallel_chunks(n, [&fn](int b, int e) {
        for (int i = b; i < e; ++i) fn(i);
    });
}

} // namespace hullstereo
