#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string_view>
#include <thread>
#include <vector>

namespace treeharmonic {

/// Worker count: hardware concurrency, capped by TREEHARMONIC_THREADS when set.
[[nodiscard]] inline unsigned worker_count() {
    unsigned workers = std::max(1U, std::thread::hardware_concurrency());
    if (const char *env = std::getenv("TREEHARMONIC_THREADS"); env != nullptr) {
        std::string_view text{env};
        unsigned cap = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
        if (ec == std::errc{} && ptr == text.data() + text.size() && cap > 0) {
            workers = std::min(workers, cap);
        }
    }
    return workers;
}

/**
 * Calls body(i) for every i in [0, count), splitting the range into contiguous
 * chunks across worker threads. Bodies must write only to slots owned by i, so
 * the result never depends on the partitioning. Small ranges run inline.
 */
template <typename Body>
void parallel_for(std::size_t count, Body &&body, std::size_t min_chunk = 4096) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), (count + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }

    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (count + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(count, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) {
                        body(i);
                    }
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto &failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
}

}  // namespace treeharmonic
