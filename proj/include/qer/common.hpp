#pragma once

#include <complex>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>

namespace qer {

using Complex = std::complex<double>;

// Error categories map to CLI exit codes: validation -> 2, numerical -> 3, io -> 4.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Derives an independent child seed from a base seed and a stream index
/// (splitmix64). Parallel workers get disjoint streams this way.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Number of worker threads used by parallel loops (OpenMP).
void set_threads(int n);
int threads();

/// Carries the first exception out of an OpenMP region (throwing across the
/// region boundary aborts the process otherwise).
class ParallelGuard {
  public:
    template <typename Fn> void run(Fn&& fn) noexcept {
        try {
            fn();
        } catch (...) {
            const std::lock_guard<std::mutex> lock(mutex_);
            if (!error_) {
                error_ = std::current_exception();
            }
        }
    }
    void rethrow() {
        if (error_) {
            std::rethrow_exception(error_);
        }
    }

  private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

} // namespace qer
