#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace evc::detail {

/// Splits [0, n) into at most `threads` contiguous chunks and runs
/// fn(chunk_index, begin, end) for each. Chunk boundaries depend only on n and
/// the chunk count, never on scheduling.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn)
{
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads == 0 ? 1 : threads, n));
    if (chunks == 1) {
        fn(std::size_t{0}, std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(chunks);
    {
        std::vector<std::jthread> workers;
        workers.reserve(chunks);
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t begin = n * c / chunks;
            const std::size_t end = n * (c + 1) / chunks;
            workers.emplace_back([&fn, &errors, c, begin, end] {
                try {
                    fn(c, begin, end);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace evc::detail
