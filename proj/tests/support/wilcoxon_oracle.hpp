#pragma once

// Reference signed-rank p-value by walking every sign vector. Shares no
// code with the library.

#include <cmath>
#include <cstdint>
#include <vector>

namespace negadapt::testing {

/// Two-sided p for the differences `d`: the fraction of sign vectors whose
/// min(W+, W-) is no larger than the observed one.
inline double brute_force_wilcoxon_p(const std::vector<double>& d) {
    std::vector<double> mags;
    std::vector<bool> positive;
    for (double x : d) {
        if (x != 0.0) {
            mags.push_back(std::fabs(x));
            positive.push_back(x > 0.0);
        }
    }
    const std::size_t n = mags.size();
    // Average rank: (#smaller) + (#equal + 1) / 2.
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t smaller = 0;
        std::size_t equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            smaller += mags[j] < mags[i];
            equal += mags[j] == mags[i];
        }
        ranks[i] = static_cast<double>(smaller) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    double total = 0.0;
    double observed_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += ranks[i];
        if (positive[i]) {
            observed_plus += ranks[i];
        }
    }
    const double observed = std::fmin(observed_plus, total - observed_plus);

    std::uint64_t hits = 0;
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        double plus = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1u) {
                plus += ranks[i];
            }
        }
        if (std::fmin(plus, total - plus) <= observed) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(patterns);
}

}  // namespace negadapt::testing
