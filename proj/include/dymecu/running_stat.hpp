#pragma once

#include <cmath>
#include <cstdint>

namespace dymecu {

// Welford accumulator over a scalar stream.
struct RunningStat {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }

    double variance() const { return count > 0 ? m2 / static_cast<double>(count) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    // sqrt(E[x^2]); the scale used for reward normalization so that a
    // constant positive stream normalizes toward 1
    double rms() const { return std::sqrt(mean * mean + variance()); }

    bool operator==(const RunningStat&) const = default;
};

} // namespace dymecu
