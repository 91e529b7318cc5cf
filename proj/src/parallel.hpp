#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dualloco::detail {

// Worker-task parallelism cap: DUALLOCO_THREADS if set to a positive integer,
// otherwise the number of logical processors.
inline int max_worker_threads() {
    if (const char* env = std::getenv("DUALLOCO_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed >= 1) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(0), ..., fn(count-1) across up to max_worker_threads() threads.
// Tasks are claimed in index order; once any task throws, unstarted tasks are
// skipped. After joining, the pending exception with the smallest index is
// rethrown, which keeps the reported failure deterministic regardless of
// thread scheduling (every index below a recorded failure has run to
// completion).
inline void run_worker_tasks(int count, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    const int threads = std::min(count, max_worker_threads());
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    auto body = [&]() {
        while (true) {
            const int index = next.fetch_add(1);
            if (index >= count) return;
            if (failed.load()) continue;  // drain the queue without running
            try {
                fn(index);
            } catch (...) {
                errors[static_cast<std::size_t>(index)] = std::current_exception();
                failed.store(true);
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(body);
    for (auto& worker : pool) worker.join();

    for (auto& error : errors) {
        if (error) std::rethrow_exception(error);
    }
}

}  // namespace dualloco::detail
