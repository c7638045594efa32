#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace dcv {

/// Block length used by every deterministic reduction. Fixed so that the
/// summation tree does not depend on the number of threads.
inline constexpr std::size_t kReductionBlock = 1024;

/// Number of threads the OpenMP kernels may use.
int thread_count();

/// Caps the OpenMP thread count; values < 1 are clamped to 1.
void set_thread_count(int threads);

/// Parses DCV_THREADS. Returns nullopt when unset; throws on a malformed value.
std::optional<int> threads_from_env();

/// Sum of term(i) for i in [0, n). Partial sums are formed per fixed-size block
/// (in parallel) and then added in block order, so the result is bit-identical
/// for any thread count.
template <class Term>
double blocked_sum(std::size_t n, Term&& term)
{
    const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
    std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
        const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
        const std::size_t end = begin + kReductionBlock < n ? begin + kReductionBlock : n;
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            s += term(i);
        partial[static_cast<std::size_t>(b)] = s;
    }
    double total = 0.0;
    for (double s : partial)
        total += s;
    return total;
}

} // namespace dcv
