#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ridepool {

// Raised for malformed scenario configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised for malformed input data such as request files (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double normal_cdf(double x, double mean, double stddev) {
    return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0)));
}

// Inverse cdf by bisection on a monotone cdf over [lo, hi].
inline double invert_cdf(const std::function<double(double)>& cdf, double alpha,
                         double lo, double hi) {
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double normal_quantile(double alpha, double mean, double stddev) {
    const double lo = mean - 12.0 * stddev;
    const double hi = mean + 12.0 * stddev;
    return invert_cdf([&](double x) { return normal_cdf(x, mean, stddev); },
                      alpha, lo, hi);
}

}  // namespace detail

// Fixed-precision float formatting so emitted files are byte-stable.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Runs fn(i) for i in [0, n) across `threads` workers. Work is split by
// index, so results written to per-index slots are independent of the
// thread count.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace ridepool
