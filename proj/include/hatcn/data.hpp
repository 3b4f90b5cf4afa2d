#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "hatcn/errors.hpp"

// Series container, preprocessing and subject-level fold construction.

namespace hatcn {

struct Series {
    std::string id;
    std::string subject_id;
    int label = 0;  // 1 = patient, 0 = healthy
    std::vector<double> values;
    double sample_rate = 0.0;  // samples/second, 0 when unknown
};

// Ground truth attached to generated series.
struct Annotation {
    std::string series_id;
    std::size_t relax_start = 0;  // first sample of the relaxation phase
    std::size_t relax_end = 0;    // sample where the decay reaches 5% of peak
    double tau = 0.0;             // decay time constant, in samples
};

struct Dataset {
    std::vector<Series> series;
    std::vector<Annotation> annotations;

    const Annotation* annotation_for(const std::string& series_id) const {
        for (const auto& a : annotations)
            if (a.series_id == series_id) return &a;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

// Truncate to the first target_length samples or right-pad with zeros, then
// min-max normalize with the extrema of the kept raw samples; padding stays 0.
// Normalizing before padding keeps the operation idempotent: a preprocessed
// series has min 0 and max 1, so a second pass is the identity.
inline Series preprocess(Series s, std::size_t target_length = 750) {
    if (s.values.empty()) throw DataError("preprocess: series '" + s.id + "' is empty");
    if (s.values.size() > target_length) s.values.resize(target_length);
    const auto [mn_it, mx_it] = std::minmax_element(s.values.begin(), s.values.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx == mn)
        throw DataError("preprocess: series '" + s.id + "' is constant; normalization undefined");
    for (auto& v : s.values) v = (v - mn) / (mx - mn);
    s.values.resize(target_length, 0.0);
    return s;
}

inline Dataset preprocess(Dataset d, std::size_t target_length = 750) {
    for (auto& s : d.series) s = preprocess(std::move(s), target_length);
    return d;
}

// ---------------------------------------------------------------------------
// Subject-level stratified k-fold
// ---------------------------------------------------------------------------

struct Split {
    std::vector<std::size_t> train;  // series indices
    std::vector<std::size_t> test;
};

// Partition subjects (never individual series) into k folds, stratified by
// class. Subjects are grouped per class, shuffled, and dealt round-robin with
// one running cursor across both groups, so every fold ends up within one
// subject of the global class proportions and no fold is empty.
inline std::vector<Split> subject_kfold(const Dataset& d, std::size_t k,
                                        std::uint64_t seed) {
    if (k < 2) throw UsageError("subject_kfold: need at least 2 folds");

    std::vector<std::string> order;  // subjects by first appearance
    std::unordered_map<std::string, int> subject_label;
    for (const auto& s : d.series) {
        auto [it, inserted] = subject_label.try_emplace(s.subject_id, s.label);
        if (inserted) order.push_back(s.subject_id);
        else if (it->second != s.label)
            throw DataError("subject_kfold: subject '" + s.subject_id +
                            "' appears with both labels");
    }
    if (k > order.size())
        throw UsageError("subject_kfold: more folds than subjects (" +
                         std::to_string(k) + " > " + std::to_string(order.size()) + ")");

    std::vector<std::string> patients, healthy;
    for (const auto& id : order)
        (subject_label[id] == 1 ? patients : healthy).push_back(id);
    std::mt19937_64 rng(seed);
    std::shuffle(patients.begin(), patients.end(), rng);
    std::shuffle(healthy.begin(), healthy.end(), rng);

    std::unordered_map<std::string, std::size_t> fold_of;
    std::size_t cursor = 0;
    for (const auto* group : {&patients, &healthy})
        for (const auto& id : *group) fold_of[id] = cursor++ % k;

    std::vector<Split> splits(k);
    for (std::size_t i = 0; i < d.series.size(); ++i) {
        const std::size_t fold = fold_of[d.series[i].subject_id];
        for (std::size_t f = 0; f < k; ++f)
            (f == fold ? splits[f].test : splits[f].train).push_back(i);
    }
    return splits;
}

}  // namespace hatcn
