#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "hatcn/baseline.hpp"
#include "hatcn/cross_validate.hpp"
#include "hatcn/explain.hpp"
#include "hatcn/io.hpp"

// JSON and CSV result documents. Everything here is a pure value-to-text map;
// the cv metrics document deliberately excludes wall-clock fields so two runs
// with the same master seed serialize byte-identically.

namespace hatcn {

using json = nlohmann::json;

namespace detail {

inline std::string fmt(double v) {
    std::string s;
    format_value(s, v);
    return s;
}

}  // namespace detail

inline json metrics_json(const Metrics& m) {
    return json{{"accuracy", m.accuracy}, {"f1", m.f1},
                {"tp", m.tp},             {"fp", m.fp},
                {"fn", m.fn},             {"tn", m.tn},
                {"degenerate_f1", m.degenerate_f1}};
}

// Deterministic cv document: per-fold metrics and seeds plus the aggregates.
inline json cv_metrics_json(const CvResult& cv, Variant variant) {
    json folds = json::array();
    for (const auto& f : cv.folds) {
        json j = metrics_json(f.metrics);
        j["repeat"] = f.repeat;
        j["fold"] = f.fold;
        j["init_seed"] = f.init_seed;
        j["train_seed"] = f.train_seed;
        folds.push_back(std::move(j));
    }
    return json{{"model", to_string(variant)},
                {"folds", std::move(folds)},
                {"mean_accuracy", cv.mean_accuracy},
                {"std_accuracy", cv.std_accuracy},
                {"mean_f1", cv.mean_f1},
                {"std_f1", cv.std_f1}};
}

// Full cv document: the deterministic content plus timings and the run setup.
inline json cv_results_json(const CvResult& cv, const CvConfig& cfg) {
    json j = cv_metrics_json(cv, cfg.train.variant);
    for (std::size_t i = 0; i < cv.folds.size(); ++i)
        j["folds"][i]["train_seconds"] = cv.folds[i].train_seconds;
    j["total_seconds"] = cv.total_seconds;
    j["config"] = json{{"layers", cfg.model.layers},
                       {"channels", cfg.model.channels},
                       {"kernel", cfg.model.kernel},
                       {"input_length", cfg.model.input_length},
                       {"folds", cfg.folds},
                       {"repeats", cfg.repeats},
                       {"master_seed", cfg.master_seed},
                       {"epochs", cfg.train.epochs},
                       {"lr", cfg.train.lr},
                       {"batch", cfg.train.batch}};
    return j;
}

// Table-style summary: one row per model variant.
inline std::string cv_summary_csv_header() {
    return "model,accuracy_mean,accuracy_std,f1_mean,f1_std\n";
}

inline std::string cv_summary_csv_row(const CvResult& cv, Variant variant) {
    return to_string(variant) + "," + detail::fmt(cv.mean_accuracy) + "," +
           detail::fmt(cv.std_accuracy) + "," + detail::fmt(cv.mean_f1) + "," +
           detail::fmt(cv.std_f1) + "\n";
}

inline std::string depth_sweep_csv(const std::vector<DepthResult>& sweep) {
    std::string out =
        "layers,hatcn_accuracy_mean,hatcn_accuracy_std,tcn_accuracy_mean,"
        "tcn_accuracy_std,hatcn_seconds,tcn_seconds\n";
    for (const auto& d : sweep)
        out += std::to_string(d.layers) + "," + detail::fmt(d.hatcn.mean_accuracy) + "," +
               detail::fmt(d.hatcn.std_accuracy) + "," +
               detail::fmt(d.tcn.mean_accuracy) + "," +
               detail::fmt(d.tcn.std_accuracy) + "," +
               detail::fmt(d.hatcn.total_seconds) + "," +
               detail::fmt(d.tcn.total_seconds) + "\n";
    return out;
}

inline std::string loss_csv(const std::vector<double>& curve) {
    std::string out = "epoch,loss\n";
    for (std::size_t e = 0; e < curve.size(); ++e)
        out += std::to_string(e + 1) + "," + detail::fmt(curve[e]) + "\n";
    return out;
}

// Per-sample explanation: prediction, across-layer attention, the within-layer
// attention rows of the relevant layers only, the relevance frequency, and the
// extracted segments.
inline json explanation_json(const std::string& series_id, const Explanation& e) {
    json layer_alpha = json::array();
    for (std::size_t layer : e.profile.relevant_layers)
        layer_alpha.push_back(
            json{{"layer", layer}, {"alpha", e.trace.layer_alpha[layer]}});
    json segments = json::array();
    for (const auto& s : e.profile.segments)
        segments.push_back(json{{"begin", s.begin}, {"end", s.end}});
    return json{{"series_id", series_id},
                {"probability", e.trace.probability},
                {"across_alpha", e.trace.across_alpha},
                {"relevant_layers", e.profile.relevant_layers},
                {"layer_alpha", std::move(layer_alpha)},
                {"freq", e.profile.freq},
                {"segments", std::move(segments)}};
}

inline std::string baseline_features_csv_header() {
    return "series_id,subject_id,label,relax_start,rt90_5,censored,prediction\n";
}

inline std::string baseline_feature_csv_row(const Series& s, const BaselineFeature& f,
                                            int prediction) {
    return s.id + "," + s.subject_id + "," + std::to_string(s.label) + "," +
           std::to_string(f.start) + "," + detail::fmt(f.rt90_5) + "," +
           (f.censored ? "1" : "0") + "," + std::to_string(prediction) + "\n";
}

}  // namespace hatcn
