#include "dcv/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dcv {

int thread_count()
{
    return omp_get_max_threads();
}

void set_thread_count(int threads)
{
    omp_set_num_threads(threads < 1 ? 1 : threads);
}

std::optional<int> threads_from_env()
{
    const char* raw = std::getenv("DCV_THREADS");
    if (raw == nullptr || *raw == '\0')
        return std::nullopt;
    char* end = nullptr;
    const long value = std::strtol(raw, &end, 10);
    if (*end != '\0' || value < 1 || value > 4096)
        throw std::invalid_argument("DCV_THREADS must be an integer >= 1, got '" +
                                    std::string(raw) + "'");
    return static_cast<int>(value);
}

} // namespace dcv
