#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace hypomix {

/// Worker count: HYPOMIX_WORKERS override, else hardware concurrency.
inline int worker_count() {
    if (const char* s = std::getenv("HYPOMIX_WORKERS")) {
        const int v = std::atoi(s);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

/// Run fn(worker, begin, end) over a static partition of [0, n). Results
/// must be combined with order-independent reductions (min/max/union) or
/// merged in index order, so the outcome does not depend on worker count.
inline void parallel_chunks(long n, const std::function<void(int, long, long)>& fn) {
    const long W = std::min<long>(worker_count(), std::max<long>(n, 1));
    if (W <= 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> ts;
    const long chunk = (n + W - 1) / W;
    for (long w = 0; w < W; ++w) {
        const long b = w * chunk;
        const long e = std::min(n, b + chunk);
        if (b >= e) break;
        ts.emplace_back(fn, static_cast<int>(w), b, e);
    }
    for (auto& t : ts) t.join();
}

} // namespace hypomix
