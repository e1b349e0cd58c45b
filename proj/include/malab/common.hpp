#ifndef MALAB_COMMON_HPP
#define MALAB_COMMON_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace malab {

inline constexpr const char* kVersion = "0.3.0";

enum class ErrCode : int {
    ok = 0,
    invalid_argument = 1,
    config = 2,
    numerical = 3,
    positivity_breakdown = 4,
    non_convergence = 5,
    io = 6,
};

/// Library error: carries a machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrCode code() const noexcept { return code_; }

private:
    ErrCode code_;
};

[[noreturn]] inline void fail(ErrCode code, const std::string& msg) { throw Error(code, msg); }

// Global knobs. Threads drive parallel_for below; the memory cap guards
// high-dimensional domain allocation (see make_domain).
void set_threads(int k);
int threads();
void set_memory_cap(std::uint64_t bytes);
std::uint64_t memory_cap();

/// Deterministic data-parallel loop: the work is split into fixed-size chunks
/// whose boundaries do not depend on the thread count, so pointwise kernels
/// produce identical results for any --threads value.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

/// Serial compensated (Kahan) sum; fixed order, thread-count independent.
double kahan_sum(const double* v, std::size_t count);
double kahan_mean(const std::vector<double>& v);

} // namespace malab

#endif
