#include "airtemp/core/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace airtemp {

int worker_count() {
    static const int n = [] {
        if (const char* env = std::getenv("AIRTEMP_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
            return 1;
        }
        unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : static_cast<int>(hc);
    }();
    return n;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    int workers = worker_count();
    if (workers <= 1 || n < 256) {
        fn(0, n);
        return;
    }
    workers = static_cast<int>(std::min<std::int64_t>(workers, n));
    std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        std::int64_t begin = t * chunk;
        std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
        if (begin >= end) break;
        threads.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : threads) th.join();
}

} // namespace airtemp
