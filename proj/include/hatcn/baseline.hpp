#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "hatcn/errors.hpp"

// Classical relaxation-time pipeline: rule-based relaxation-start detection,
// RT90-5 extraction and a linear margin classifier on the scalar feature.

namespace hatcn {

// ---------------------------------------------------------------------------
// Relaxation start detection
// ---------------------------------------------------------------------------

struct RelaxationAnalysis {
    double eta = 0.0;                       // strength threshold (max - min) / 2
    std::vector<std::size_t> candidates;    // TS: steps with strength > eta
    std::size_t start = 0;                  // lattermost of the top-85% strongest
};

// Rules: threshold at half the dynamic range, collect steps above it, keep the
// ceil(0.85 * |TS|) strongest (ties keep the later step, favoring a later
// start), and take the lattermost kept index.
inline RelaxationAnalysis detect_relaxation_start(const std::vector<double>& x) {
    if (x.size() < 3)
        throw DataError("detect_relaxation_start: series must have at least 3 samples");
    const auto [mn_it, mx_it] = std::minmax_element(x.begin(), x.end());
    if (*mx_it == *mn_it)
        throw DataError("detect_relaxation_start: constant series has no relaxation");

    RelaxationAnalysis r;
    r.eta = (*mx_it - *mn_it) / 2.0;  // half the dynamic range
    for (std::size_t t = 0; t < x.size(); ++t)
        if (x[t] > r.eta) r.candidates.push_back(t);
    if (r.candidates.empty())  // possible only when max <= -min
        throw DataError("detect_relaxation_start: no step exceeds the strength threshold");

    std::vector<std::size_t> ranked = r.candidates;
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] > x[b];
        return a > b;  // equal strength: later step ranks higher
    });
    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(0.85 * static_cast<double>(ranked.size())));
    ranked.resize(std::max<std::size_t>(keep, 1));
    r.start = *std::max_element(ranked.begin(), ranked.end());
    return r;
}

// ---------------------------------------------------------------------------
// RT90-5
// ---------------------------------------------------------------------------

struct Rt905 {
    double duration = 0.0;  // time steps from the 0.9M crossing to the 0.05M crossing
    bool censored = false;  // series never reached 0.05M; duration = segment length
};

namespace detail {

// First time >= from where the series reaches level (x <= level), with linear
// interpolation between the bracketing samples. Returns segment length when
// the level is never reached.
inline std::pair<double, bool> crossing_time(const std::vector<double>& x,
                                             std::size_t from, double level) {
    for (std::size_t t = from; t < x.size(); ++t) {
        if (x[t] > level) continue;
        if (t == from || x[t - 1] <= level) return {static_cast<double>(t), true};
        const double drop = x[t - 1] - x[t];
        const double frac = drop > 0.0 ? (x[t - 1] - level) / drop : 0.0;
        return {static_cast<double>(t - 1) + frac, true};
    }
    return {static_cast<double>(x.size() - from), false};
}

}  // namespace detail

// Time to fall from 90% to 5% of the relaxation-start strength M = x[start].
inline Rt905 rt90_5(const std::vector<double>& x, std::size_t start) {
    if (start >= x.size()) throw DataError("rt90_5: start index beyond series end");
    const double m = x[start];
    auto [t90, hit90] = detail::crossing_time(x, start, 0.9 * m);
    auto [t5, hit5] = detail::crossing_time(x, start, 0.05 * m);
    if (!hit5 || !hit90) return {static_cast<double>(x.size() - start), true};
    return {t5 - t90, false};
}

// ---------------------------------------------------------------------------
// Margin classifier on the scalar feature
// ---------------------------------------------------------------------------

struct MarginClassifier {
    double weight = 0.0;
    double bias = 0.0;
    double mean = 0.0;  // standardization of the training features
    double sd = 1.0;

    double decision(double feature) const {
        return weight * ((feature - mean) / sd) + bias;
    }
    int classify(double feature) const { return decision(feature) > 0.0 ? 1 : 0; }
};

// Soft-margin linear fit on the standardized 1-D feature: full-batch hinge
// subgradient descent with L2 penalty. Labels are {0, 1}.
inline MarginClassifier train_margin_classifier(
    const std::vector<std::pair<double, int>>& samples, std::size_t epochs = 500,
    double lr = 0.1, double l2 = 1e-3) {
    bool has_pos = false, has_neg = false;
    for (const auto& [f, y] : samples) (y == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw TrainError("train_margin_classifier: both classes must be present");

    MarginClassifier c;
    const double n = static_cast<double>(samples.size());
    c.mean = 0.0;
    for (const auto& [f, y] : samples) c.mean += f;
    c.mean /= n;
    double var = 0.0;
    for (const auto& [f, y] : samples) var += (f - c.mean) * (f - c.mean);
    c.sd = std::sqrt(var / n);
    if (c.sd == 0.0) c.sd = 1.0;  // all features equal: z = 0, bias decides

    for (std::size_t e = 0; e < epochs; ++e) {
        const double step = lr / (1.0 + 0.01 * static_cast<double>(e));
        double gw = 2.0 * l2 * c.weight, gb = 0.0;
        for (const auto& [f, label] : samples) {
            const double y = label == 1 ? 1.0 : -1.0;
            const double z = (f - c.mean) / c.sd;
            if (y * (c.weight * z + c.bias) < 1.0) {
                gw -= y * z / n;
                gb -= y / n;
            }
        }
        c.weight -= step * gw;
        c.bias -= step * gb;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Whole-series feature
// ---------------------------------------------------------------------------

struct BaselineFeature {
    double eta = 0.0;
    std::size_t start = 0;
    double rt90_5 = 0.0;
    bool censored = false;
};

inline BaselineFeature baseline_feature(const std::vector<double>& x) {
    auto analysis = detect_relaxation_start(x);
    auto rt = rt90_5(x, analysis.start);
    return {analysis.eta, analysis.start, rt.duration, rt.censored};
}

}  // namespace hatcn
