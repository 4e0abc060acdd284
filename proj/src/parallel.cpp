#include "trendlab/parallel.hpp"

#include <omp.h>

namespace trendlab {

int max_threads() noexcept { return omp_get_max_threads(); }

}  // namespace trendlab
