#pragma once

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

namespace speechscore {

// Evaluates fn(i) for i in [0, n) on `jobs` OpenMP threads. Results are stored
// by index, so output order never depends on scheduling. If any call throws,
// the exception of the lowest failing index is rethrown after all finish.
template <class Fn>
auto parallel_map(std::size_t n, int jobs, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
    using R = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    const int threads = jobs < 1 ? 1 : jobs;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        try {
            out[ui] = fn(ui);
        } catch (...) {
            errors[ui] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

} // namespace speechscore
