#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "hatcn/baseline.hpp"
#include "hatcn/data.hpp"
#include "hatcn/train.hpp"

// Repeated subject-level k-fold cross-validation. Every (repeat, fold) cell is
// an independent job with its own model, fed by seeds derived from one master
// seed, so results are identical no matter how many workers run them.

namespace hatcn {

// splitmix64; the documented seed-splitting rule. Each derivation step chains
// the previous state with the next coordinate.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class SeedPurpose : std::uint64_t { folds = 1, init = 2, train = 3 };

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t repeat,
                                 std::uint64_t fold, SeedPurpose purpose) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ repeat);
    s = splitmix64(s ^ fold);
    return splitmix64(s ^ static_cast<std::uint64_t>(purpose));
}

struct CvConfig {
    ModelConfig model;
    TrainConfig train;
    std::size_t folds = 10;
    std::size_t repeats = 5;
    std::uint64_t master_seed = 1;
    std::size_t jobs = 1;
};

struct FoldResult {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    std::uint64_t init_seed = 0;
    std::uint64_t train_seed = 0;
    Metrics metrics;
    double train_seconds = 0.0;
};

struct CvResult {
    std::vector<FoldResult> folds;  // ordered by (repeat, fold)
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    double total_seconds = 0.0;
};

namespace detail {

// population mean/std over the per-fold values
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / n)};
}

}  // namespace detail

inline CvResult cross_validate(const Dataset& data, const CvConfig& cfg) {
    if (cfg.repeats < 1) throw UsageError("cross_validate: repeats must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    // resolve all splits up front; each repeat reshuffles subjects
    std::vector<std::vector<Split>> splits;
    for (std::size_t r = 0; r < cfg.repeats; ++r)
        splits.push_back(
            subject_kfold(data, cfg.folds, derive_seed(cfg.master_seed, r, 0,
                                                       SeedPurpose::folds)));

    const std::size_t total = cfg.repeats * cfg.folds;
    CvResult result;
    result.folds.resize(total);

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            const std::size_t job = next.fetch_add(1);
            if (job >= total) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            const std::size_t r = job / cfg.folds;
            const std::size_t f = job % cfg.folds;
            try {
                FoldResult fr;
                fr.repeat = r;
                fr.fold = f;
                fr.init_seed = derive_seed(cfg.master_seed, r, f, SeedPurpose::init);
                fr.train_seed = derive_seed(cfg.master_seed, r, f, SeedPurpose::train);

                auto model = Model::init(cfg.model, fr.init_seed);
                TrainConfig tc = cfg.train;
                tc.seed = fr.train_seed;
                const auto start = std::chrono::steady_clock::now();
                train(model, data, splits[r][f].train, tc);
                fr.train_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                fr.metrics = evaluate(model, data, splits[r][f].test, tc.variant);
                result.folds[job] = std::move(fr);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, cfg.jobs);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<double> accs, f1s;
    for (const auto& fr : result.folds) {
        accs.push_back(fr.metrics.accuracy);
        f1s.push_back(fr.metrics.f1);
    }
    std::tie(result.mean_accuracy, result.std_accuracy) = detail::mean_std(accs);
    std::tie(result.mean_f1, result.std_f1) = detail::mean_std(f1s);
    result.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Subject-level CV of the relaxation-time margin classifier, run under the
// exact fold protocol the networks use so the accuracies are comparable.
// Feature extraction happens once per series; only the splits vary.
inline CvResult baseline_cross_validate(const Dataset& data, std::size_t folds,
                                        std::size_t repeats, std::uint64_t master_seed) {
    if (repeats < 1) throw UsageError("baseline_cross_validate: repeats must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<BaselineFeature> features;
    features.reserve(data.series.size());
    for (const auto& s : data.series) features.push_back(baseline_feature(s.values));

    CvResult result;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto splits =
            subject_kfold(data, folds, derive_seed(master_seed, r, 0, SeedPurpose::folds));
        for (std::size_t f = 0; f < folds; ++f) {
            FoldResult fr;
            fr.repeat = r;
            fr.fold = f;

            std::vector<std::pair<double, int>> samples;
            samples.reserve(splits[f].train.size());
            for (auto i : splits[f].train)
                samples.emplace_back(features[i].rt90_5, data.series[i].label);
            const auto start = std::chrono::steady_clock::now();
            const auto classifier = train_margin_classifier(samples);
            fr.train_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();

            std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
            for (auto i : splits[f].test) {
                const int predicted = classifier.classify(features[i].rt90_5);
                if (predicted == 1 && data.series[i].label == 1) ++tp;
                else if (predicted == 1 && data.series[i].label == 0) ++fp;
                else if (predicted == 0 && data.series[i].label == 1) ++fn;
                else ++tn;
            }
            fr.metrics = metrics_from_counts(tp, fp, fn, tn);
            result.folds.push_back(std::move(fr));
        }
    }

    std::vector<double> accs, f1s;
    for (const auto& fr : result.folds) {
        accs.push_back(fr.metrics.accuracy);
        f1s.push_back(fr.metrics.f1);
    }
    std::tie(result.mean_accuracy, result.std_accuracy) = detail::mean_std(accs);
    std::tie(result.mean_f1, result.std_f1) = detail::mean_std(f1s);
    result.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Accuracy as a function of network depth, for the depth-comparison table.
struct DepthResult {
    std::size_t layers = 0;
    CvResult hatcn;
    CvResult tcn;
};

inline std::vector<DepthResult> depth_sweep(const Dataset& data, CvConfig cfg,
                                            const std::vector<std::size_t>& depths) {
    std::vector<DepthResult> out;
    for (std::size_t k : depths) {
        DepthResult dr;
        dr.layers = k;
        cfg.model.layers = k;
        cfg.model.dilations.clear();  // re-derive the doubling schedule
        cfg.model.finalize();
        cfg.train.variant = Variant::hatcn;
        dr.hatcn = cross_validate(data, cfg);
        cfg.train.variant = Variant::tcn;
        dr.tcn = cross_validate(data, cfg);
        out.push_back(std::move(dr));
    }
    return out;
}

}  // namespace hatcn
