#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hatcn/data.hpp"
#include "hatcn/errors.hpp"
#include "hatcn/model.hpp"

// Mini-batch training with adaptive-moment updates and binary cross-entropy,
// plus threshold evaluation. One training call is strictly sequential and
// fully determined by its seed.

namespace hatcn {

struct TrainConfig {
    double lr = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    Variant variant = Variant::hatcn;

    // CLI-facing validation. train() itself also accepts lr == 0 (a no-op
    // schedule), which the parameter-freeze tests rely on.
    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("train: learning rate must be > 0");
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch < 1) throw ConfigError("train: batch size must be >= 1");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("train: moment coefficients must lie in [0, 1)");
    }
};

struct TrainResult {
    std::vector<double> loss_curve;  // mean training loss per epoch
};

namespace detail {

struct AdamState {
    std::vector<Grid> m, v;
    std::size_t t = 0;

    explicit AdamState(const std::vector<ad::NodePtr>& params) {
        for (const auto& p : params) {
            m.emplace_back(p->value.rows(), p->value.cols(), 0.0);
            v.emplace_back(p->value.rows(), p->value.cols(), 0.0);
        }
    }

    void step(const std::vector<ad::NodePtr>& params, const TrainConfig& cfg) {
        ++t;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (std::size_t p = 0; p < params.size(); ++p) {
            Grid& value = params[p]->value;
            const Grid& grad = params[p]->grad;
            for (std::size_t i = 0; i < value.size(); ++i) {
                m[p][i] = cfg.beta1 * m[p][i] + (1.0 - cfg.beta1) * grad[i];
                v[p][i] = cfg.beta2 * v[p][i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                const double mhat = m[p][i] / bc1;
                const double vhat = v[p][i] / bc2;
                value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            }
        }
    }
};

}  // namespace detail

// Train in place on the given series indices. Gradients are accumulated one
// sample at a time with seed 1/|batch|, so a batch update optimizes the mean
// loss over the batch. A parameter subset restricts updates to those nodes
// (e.g. head-only fits with frozen convolutions); gradients still flow through
// everything.
inline TrainResult train(Model& model, const Dataset& data,
                         const std::vector<std::size_t>& indices, const TrainConfig& cfg,
                         const std::vector<ad::NodePtr>* trainable = nullptr) {
    if (indices.empty()) throw TrainError("train: empty training set");
    bool has_pos = false, has_neg = false;
    for (auto i : indices) (data.series[i].label == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw TrainError("train: training set must contain both classes");
    if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (cfg.batch < 1) throw ConfigError("train: batch size must be >= 1");
    if (cfg.lr < 0.0) throw ConfigError("train: learning rate must be >= 0");

    auto params = trainable ? *trainable : model.parameters(cfg.variant);
    detail::AdamState adam(params);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(indices);

    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
            const std::size_t end = std::min(begin + cfg.batch, order.size());
            const double inv = 1.0 / static_cast<double>(end - begin);
            model.zero_grad(cfg.variant);
            double batch_loss = 0.0;
            for (std::size_t j = begin; j < end; ++j) {
                const Series& s = data.series[order[j]];
                auto fp = model.forward(s.values, cfg.variant);
                auto loss = ad::bce_with_logit(fp.logit, static_cast<double>(s.label));
                batch_loss += loss->value[0];
                ad::backward(loss, inv);
            }
            if (!std::isfinite(batch_loss))
                throw TrainError("train: loss diverged at epoch " + std::to_string(epoch) +
                                 ", batch starting at sample " + std::to_string(begin));
            epoch_loss += batch_loss;
            adam.step(params, cfg);
        }
        if (!model.parameters_finite())
            throw TrainError("train: parameters left the finite range at epoch " +
                             std::to_string(epoch));
        result.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    bool degenerate_f1 = false;  // precision or recall had a zero denominator
};

// Accuracy and F1 from raw confusion counts; the F1 degenerates (reported 0,
// flagged) when precision or recall has a zero denominator.
inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                   std::size_t tn) {
    Metrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.tn = tn;
    const std::size_t total = tp + fp + fn + tn;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    if (tp + fp == 0 || tp + fn == 0) {
        m.degenerate_f1 = true;
        m.f1 = 0.0;
    } else {
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        m.f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    }
    return m;
}

// Threshold the patient probability; patient class is the positive class.
inline Metrics evaluate(const Model& model, const Dataset& data,
                        const std::vector<std::size_t>& indices, Variant variant,
                        double threshold = 0.5) {
    if (indices.empty()) throw UsageError("evaluate: empty test set");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (auto i : indices) {
        const Series& s = data.series[i];
        const int predicted = model.forward(s.values, variant).yhat() > threshold ? 1 : 0;
        if (predicted == 1 && s.label == 1) ++tp;
        else if (predicted == 1 && s.label == 0) ++fp;
        else if (predicted == 0 && s.label == 1) ++fn;
        else ++tn;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

}  // namespace hatcn
