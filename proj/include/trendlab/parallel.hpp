#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace trendlab {

/// Execution policy for the data-parallel kernels. `Serial` is the reference
/// path; `Parallel` distributes independent work items over OpenMP threads.
/// Both write each item's result into its own slot, so the output does not
/// depend on scheduling.
enum class Exec { Serial, Parallel };

/// Evaluate `fn(i)` for i in [0, n) and collect the results in order.
/// Exceptions thrown inside a worker are rethrown on the calling thread
/// (first one by index wins).
template <class T, class Fn>
std::vector<T> map_indexed(std::size_t n, Fn&& fn, Exec exec = Exec::Parallel) {
    std::vector<T> out(n);
    if (exec == Exec::Serial) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::exception_ptr> errors(n);
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

int max_threads() noexcept;

}  // namespace trendlab
