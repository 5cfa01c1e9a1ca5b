#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace automap {

inline int& thread_count_ref() {
    static int n = int(std::max(1u, std::thread::hardware_concurrency()));
    return n;
}

inline void set_thread_count(int n) { thread_count_ref() = std::max(1, n); }
inline int thread_count() { return thread_count_ref(); }

// Static partition of [begin, end) across workers. fn(i, worker) runs with a
// stable worker id in [0, workers), so callers can hand each worker its own
// scratch buffers. Results must not depend on the partition: any reduction a
// caller performs has to use a thread-count-independent grouping. Exceptions
// from workers are captured and rethrown on the calling thread.
template <typename Fn>
void parallel_for_workers(size_t begin, size_t end, Fn&& fn) {
    size_t total = end > begin ? end - begin : 0;
    if (total == 0) return;
    int workers = int(std::min<size_t>(size_t(thread_count()), total));
    if (workers <= 1) {
        for (size_t i = begin; i < end; ++i) fn(i, 0);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    size_t chunk = (total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        size_t lo = begin + size_t(w) * chunk;
        size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, w, &fn, &error, &error_mutex] {
            try {
                for (size_t i = lo; i < hi; ++i) fn(i, w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

template <typename Fn>
void parallel_for(size_t begin, size_t end, Fn&& fn) {
    parallel_for_workers(begin, end, [&fn](size_t i, int) { fn(i); });
}

}  // namespace automap
