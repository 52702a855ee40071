#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pwave {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr cplx I{0.0, 1.0};

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Grid or sampling too coarse for the requested operation.
struct resolution_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed user-supplied specification (cubic term, potential, config).
struct spec_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input outside the hypothesis class of an estimate (e.g. a potential that
// fails its decay bound).
struct hypothesis_error : std::domain_error {
    using std::domain_error::domain_error;
};

namespace detail {
inline std::atomic<int>& worker_slot() {
    static std::atomic<int> n{1};
    return n;
}
inline bool& in_parallel() {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

inline void set_workers(int n) { detail::worker_slot() = std::max(1, n); }
inline int workers() { return detail::worker_slot(); }

// Runs fn(i) for i in [0, n) on a static partition.  Each index owns its
// output slot, so results do not depend on the worker count.  Nested calls
// run serially on the calling worker.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers()), n);
    if (w <= 1 || detail::in_parallel()) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(w);
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            detail::in_parallel() = true;
            try {
                for (std::size_t i = t; i < n; i += w) fn(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

inline double sq(double x) { return x * x; }
inline double norm2(const cvec& v) {
    double s = 0;
    for (auto& z : v) s += std::norm(z);
    return s;
}

}  // namespace pwave
