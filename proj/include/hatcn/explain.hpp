#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "hatcn/errors.hpp"
#include "hatcn/model.hpp"

// Receptive-field attribution: map high-attention hidden cells back to the
// input segments they can see. Only valid for the doubling dilation schedule
// (d = 2^i), where layer i's cumulative receptive field at time t starts at
// t - (2^(i+1) - 1)(l - 1).

namespace hatcn {

// Start of the input-level receptive field of hidden cell (layer, t); clamped
// at the series origin. layer is 0-based.
inline std::size_t receptive_field_start(std::size_t t, std::size_t layer,
                                         std::size_t kernel) {
    if (kernel < 2) throw ConfigError("receptive_field_start: kernel size must be >= 2");
    if (layer + 1 >= 8 * sizeof(std::size_t))
        throw ConfigError("receptive_field_start: layer index out of range");
    const std::size_t reach = ((std::size_t{1} << (layer + 1)) - 1) * (kernel - 1);
    return t > reach ? t - reach : 0;
}

struct ReceptiveField {
    std::size_t layer = 0;
    std::size_t time = 0;
    std::size_t start = 0;
};

// Relevant layers (RL) and (layer, time) pairs (RT) picked by attention mass.
struct Selection {
    std::vector<std::size_t> layers;
    std::vector<std::pair<std::size_t, std::size_t>> steps;  // sorted (layer, time)
};

namespace detail {

// Indices of the ceil(pct * n) largest values, returned in ascending index
// order. Ties keep the earlier index so explanations are reproducible.
inline std::vector<std::size_t> top_indices(const std::vector<double>& values,
                                            double pct, const char* what) {
    if (!(pct > 0.0) || pct > 1.0)
        throw UsageError(std::string(what) + ": percentile must be in (0, 1]");
    if (values.empty()) throw UsageError(std::string(what) + ": empty weight vector");
    const std::size_t n = values.size();
    std::size_t keep =
        static_cast<std::size_t>(std::ceil(pct * static_cast<double>(n)));
    keep = std::clamp<std::size_t>(keep, 1, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace detail

// Pick the top layer_pct layers by across-layer attention, then within each
// picked layer the top step_pct time steps by that layer's own attention row.
inline Selection select_relevant(const ForwardTrace& trace, double layer_pct,
                                 double step_pct) {
    if (trace.across_alpha.empty() || trace.layer_alpha.empty())
        throw UsageError("select_relevant: trace has no attention weights");
    if (trace.layer_alpha.size() != trace.across_alpha.size())
        throw UsageError("select_relevant: trace layer count mismatch");
    Selection sel;
    sel.layers = detail::top_indices(trace.across_alpha, layer_pct, "select_relevant");
    for (std::size_t i : sel.layers)
        for (std::size_t t :
             detail::top_indices(trace.layer_alpha[i], step_pct, "select_relevant"))
            sel.steps.emplace_back(i, t);
    return sel;
}

// Freq_j: number of selected receptive fields [s, t] that contain step j.
inline std::vector<std::size_t> relevance_frequency(const Selection& sel,
                                                    std::size_t kernel, std::size_t length) {
    std::vector<std::size_t> freq(length, 0);
    for (const auto& [layer, t] : sel.steps) {
        if (!std::binary_search(sel.layers.begin(), sel.layers.end(), layer))
            throw UsageError("relevance_frequency: step references an unselected layer");
        if (t >= length)
            throw UsageError("relevance_frequency: step beyond series length");
        for (std::size_t j = receptive_field_start(t, layer, kernel); j <= t; ++j)
            ++freq[j];
    }
    return freq;
}

struct Segment {
    std::size_t begin = 0;  // inclusive
    std::size_t end = 0;    // inclusive

    bool operator==(const Segment&) const = default;
};

// Steps whose frequency reaches the (1 - pct) nearest-rank quantile of the
// strictly positive frequencies, merged into maximal contiguous runs. Zeros
// stay out of the quantile population: with sparse fields they would drag the
// threshold to 0 and mark everything.
inline std::vector<Segment> extract_segments(const std::vector<std::size_t>& freq,
                                             double pct) {
    if (!(pct > 0.0) || pct > 1.0)
        throw UsageError("extract_segments: percentile must be in (0, 1]");
    std::vector<std::size_t> positive;
    for (std::size_t v : freq)
        if (v > 0) positive.push_back(v);
    if (positive.empty()) return {};
    std::sort(positive.begin(), positive.end());
    std::size_t rank = static_cast<std::size_t>(
        std::ceil((1.0 - pct) * static_cast<double>(positive.size())));
    rank = std::clamp<std::size_t>(rank, 1, positive.size());
    const std::size_t threshold = positive[rank - 1];

    std::vector<Segment> segments;
    bool open = false;
    for (std::size_t t = 0; t < freq.size(); ++t) {
        if (freq[t] >= threshold) {
            if (!open) {
                segments.push_back({t, t});
                open = true;
            } else {
                segments.back().end = t;
            }
        } else {
            open = false;
        }
    }
    return segments;
}

// Full attribution for one forward trace.
struct RelevanceProfile {
    std::vector<std::size_t> freq;
    std::vector<std::size_t> relevant_layers;
    std::vector<std::pair<std::size_t, std::size_t>> relevant_steps;
    std::vector<Segment> segments;
};

inline RelevanceProfile explain_trace(const ForwardTrace& trace, const ModelConfig& cfg,
                                      double layer_pct = 0.10, double step_pct = 0.10) {
    if (!cfg.doubling_dilations())
        throw ConfigError(
            "explain: receptive-field tracing requires the doubling dilation schedule");
    auto sel = select_relevant(trace, layer_pct, step_pct);
    RelevanceProfile profile;
    profile.relevant_layers = std::move(sel.layers);
    profile.relevant_steps = std::move(sel.steps);
    Selection view{profile.relevant_layers, profile.relevant_steps};
    profile.freq = relevance_frequency(view, cfg.kernel, cfg.input_length);
    // the step percentile doubles as the frequency percentile; the reference
    // treatment uses 10% for both
    profile.segments = extract_segments(profile.freq, step_pct);
    return profile;
}

struct Explanation {
    ForwardTrace trace;
    RelevanceProfile profile;
};

inline Explanation explain_series(const Model& model, std::span<const double> x,
                                  double layer_pct = 0.10, double step_pct = 0.10) {
    Explanation e;
    e.trace = model.forward(x).trace();
    e.profile = explain_trace(e.trace, model.config(), layer_pct, step_pct);
    return e;
}

}  // namespace hatcn
