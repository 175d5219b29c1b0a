#include "qer/common.hpp"

#include <omp.h>

namespace qer {

void set_threads(int n) {
    if (n < 1) {
        throw ValidationError("thread count must be positive");
    }
    omp_set_num_threads(n);
}

int threads() { return omp_get_max_threads(); }

} // namespace qer
