#pragma once

#include <cstddef>
#include <vector>

// Brute-force receptive-field tracing, independent of the analytic start
// formula. Builds a single-channel causal conv stack with all-ones kernels and
// doubling dilations: every wired path has positive weight, so bumping input j
// changes hidden cell (layer, t) exactly when j lies in its receptive field.
// Values stay small integers, so exact comparison is safe.

namespace testsupport {

inline std::vector<std::vector<double>> ones_conv_stack(const std::vector<double>& x,
                                                        std::size_t layers,
                                                        std::size_t kernel) {
    std::vector<std::vector<double>> hidden;
    std::vector<double> cur = x;
    for (std::size_t i = 0; i < layers; ++i) {
        const std::size_t d = std::size_t{1} << i;
        std::vector<double> next(cur.size(), 0.0);
        for (std::size_t t = 0; t < cur.size(); ++t)
            for (std::size_t k = 0; k < kernel; ++k) {
                const std::size_t shift = k * d;
                if (shift <= t) next[t] += cur[t - shift];
            }
        hidden.push_back(next);
        cur = std::move(next);
    }
    return hidden;
}

// All input indices whose perturbation reaches hidden cell (layer, t).
inline std::vector<std::size_t> influencing_inputs(std::size_t length, std::size_t layers,
                                                   std::size_t kernel, std::size_t layer,
                                                   std::size_t t) {
    const std::vector<double> base(length, 1.0);
    const double reference = ones_conv_stack(base, layers, kernel)[layer][t];
    std::vector<std::size_t> influencing;
    for (std::size_t j = 0; j < length; ++j) {
        std::vector<double> bumped = base;
        bumped[j] += 1.0;
        if (ones_conv_stack(bumped, layers, kernel)[layer][t] != reference)
            influencing.push_back(j);
    }
    return influencing;
}

}  // namespace testsupport
