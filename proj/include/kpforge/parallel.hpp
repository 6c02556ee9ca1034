#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace kpforge {

/// Applies f to every item on at most `threads` workers. Results keep input
/// order. If any call throws, the exception of the lowest failing index is
/// rethrown after all workers finish.
template <class T, class F>
auto parallel_map(const std::vector<T>& items, F f, std::size_t threads) {
    using R = std::invoke_result_t<F&, const T&>;
    std::vector<std::optional<R>> slots(items.size());
    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < items.size();) {
            try {
                slots[i].emplace(f(items[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t n = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(items.size(), 1));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n);
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<R> out;
    out.reserve(items.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace kpforge
