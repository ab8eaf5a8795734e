#include "hamball/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hamball {

std::size_t thread_budget() {
    std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HAMBALL_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return std::min<std::size_t>(static_cast<std::size_t>(v), 256);
        } catch (const std::exception&) {
        }
    }
    return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_budget(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace hamball
