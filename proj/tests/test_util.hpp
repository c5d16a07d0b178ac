#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace testutil {

inline double mean(const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_sd(const std::vector<double>& xs) {
    double m = mean(xs);
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double mean_se(const std::vector<double>& xs) {
    return sample_sd(xs) / std::sqrt(static_cast<double>(xs.size()));
}

inline double binom_se(double p_hat, int64_t n) {
    return std::sqrt(std::max(p_hat * (1.0 - p_hat), 1e-12) / static_cast<double>(n));
}

}  // namespace testutil
