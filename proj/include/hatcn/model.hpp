#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hatcn/autodiff.hpp"
#include "hatcn/errors.hpp"
#include "hatcn/grid.hpp"

namespace hatcn {

enum class Variant { hatcn, tcn };

inline std::string to_string(Variant v) { return v == Variant::hatcn ? "hatcn" : "tcn"; }

inline Variant variant_from_string(const std::string& s) {
    if (s == "hatcn") return Variant::hatcn;
    if (s == "tcn") return Variant::tcn;
    throw UsageError("unknown model variant '" + s + "' (expected hatcn or tcn)");
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ModelConfig {
    std::size_t layers = 2;        // hidden conv layers K
    std::size_t channels = 4;      // kernel filters per layer C
    std::size_t kernel = 50;       // kernel filter size l
    std::size_t input_length = 750;
    std::vector<std::size_t> dilations;  // defaults to 2^i for layer i
    bool dilation_overridden = false;

    void finalize() {
        if (dilations.empty()) {
            dilations.resize(layers);
            for (std::size_t i = 0; i < layers; ++i) dilations[i] = std::size_t{1} << i;
            dilation_overridden = false;
        }
        validate();
    }

    void validate() const {
        if (layers < 1) throw ConfigError("model: layers must be >= 1");
        if (channels < 1) throw ConfigError("model: channels must be >= 1");
        if (kernel < 2) throw ConfigError("model: kernel size must be >= 2");
        if (input_length < 1) throw ConfigError("model: input length must be >= 1");
        if (dilations.size() != layers)
            throw ConfigError("model: dilation schedule length must equal layer count");
        if (!dilation_overridden) {
            for (std::size_t i = 0; i < layers; ++i)
                if (dilations[i] != (std::size_t{1} << i))
                    throw ConfigError("model: non-default dilation schedule requires override flag");
        }
    }

    bool doubling_dilations() const {
        for (std::size_t i = 0; i < layers; ++i)
            if (dilations[i] != (std::size_t{1} << i)) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Attention stages
// ---------------------------------------------------------------------------

// alpha = softmax(tanh(w^T H)), a 1xT probability row; gamma = relu(H alpha^T),
// the Cx1 attention-weighted summary of H.
inline std::pair<ad::NodePtr, ad::NodePtr> attention_pool(const ad::NodePtr& h,
                                                          const ad::NodePtr& w) {
    if (w->value.rows() != h->value.rows() || w->value.cols() != 1)
        throw ConfigError("attention_pool: weight vector must be channels x 1");
    auto scores = ad::matmul(ad::transpose(w), h);
    auto alpha = ad::softmax_rows(ad::tanh(scores));
    auto gamma = ad::relu(ad::matmul(h, ad::transpose(alpha)));
    return {alpha, gamma};
}

inline std::pair<ad::NodePtr, ad::NodePtr> within_layer_attention(const ad::NodePtr& h_i,
                                                                  const ad::NodePtr& w_i) {
    return attention_pool(h_i, w_i);
}

inline std::pair<ad::NodePtr, ad::NodePtr> across_layer_attention(const ad::NodePtr& m,
                                                                  const ad::NodePtr& w) {
    return attention_pool(m, w);
}

// ---------------------------------------------------------------------------
// Forward results
// ---------------------------------------------------------------------------

// Plain-value record of one forward pass, for reporting and explanation.
struct ForwardTrace {
    std::vector<Grid> hidden;               // H_i, CxT per layer
    std::vector<std::vector<double>> layer_alpha;  // alpha_i, length T each
    std::vector<std::vector<double>> layer_gamma;  // gamma_i, length C each
    Grid summary_matrix;                    // M, CxK
    std::vector<double> across_alpha;       // alpha, length K
    std::vector<double> across_gamma;       // gamma, length C
    double probability = 0.0;               // yhat
};

// Graph handles from one forward pass; keeps the tape alive for backward().
struct ForwardPass {
    std::vector<ad::NodePtr> hidden;
    std::vector<ad::NodePtr> layer_alpha;
    std::vector<ad::NodePtr> layer_gamma;
    ad::NodePtr summary_matrix;
    ad::NodePtr across_alpha;
    ad::NodePtr across_gamma;
    ad::NodePtr logit;
    ad::NodePtr probability;

    double yhat() const { return probability->value[0]; }

    ForwardTrace trace() const {
        ForwardTrace t;
        for (const auto& h : hidden) t.hidden.push_back(h->value);
        for (const auto& a : layer_alpha) t.layer_alpha.push_back(a->value.values());
        for (const auto& g : layer_gamma) t.layer_gamma.push_back(g->value.values());
        if (summary_matrix) t.summary_matrix = summary_matrix->value;
        if (across_alpha) t.across_alpha = across_alpha->value.values();
        if (across_gamma) t.across_gamma = across_gamma->value.values();
        t.probability = yhat();
        return t;
    }
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

class Model {
public:
    Model() = default;

    // Conv and head weights start uniform in +-sqrt(1/fan_in); biases and the
    // attention vectors start at zero, so training begins from uniform
    // attention.
    static Model init(ModelConfig cfg, std::uint64_t seed) {
        cfg.finalize();
        Model m;
        m.cfg_ = cfg;
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < cfg.layers; ++i) {
            const std::size_t cin = i == 0 ? 1 : cfg.channels;
            const double bound = 1.0 / std::sqrt(static_cast<double>(cin * cfg.kernel));
            std::uniform_real_distribution<double> dist(-bound, bound);
            Grid k(cfg.channels, cin * cfg.kernel);
            for (std::size_t j = 0; j < k.size(); ++j) k[j] = dist(rng);
            m.kernels_.push_back(ad::parameter(std::move(k)));
            m.conv_biases_.push_back(ad::parameter(Grid(cfg.channels, 1, 0.0)));
        }
        for (std::size_t i = 0; i < cfg.layers; ++i)
            m.layer_attn_.push_back(ad::parameter(Grid(cfg.channels, 1, 0.0)));
        m.across_attn_ = ad::parameter(Grid(cfg.channels, 1, 0.0));
        {
            const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.channels));
            std::uniform_real_distribution<double> dist(-bound, bound);
            Grid hw(1, cfg.channels);
            for (std::size_t j = 0; j < hw.size(); ++j) hw[j] = dist(rng);
            m.head_weight_ = ad::parameter(std::move(hw));
            m.head_bias_ = ad::parameter(Grid(1, 1, 0.0));
        }
        return m;
    }

    const ModelConfig& config() const { return cfg_; }

    // Full hierarchical forward: conv stack, within-layer attention per layer,
    // across-layer attention over the summary matrix, sigmoid head.
    ForwardPass forward(std::span<const double> x) const {
        ForwardPass fp;
        fp.hidden = conv_stack(x);
        for (std::size_t i = 0; i < cfg_.layers; ++i) {
            auto [alpha, gamma] = within_layer_attention(fp.hidden[i], layer_attn_[i]);
            fp.layer_alpha.push_back(alpha);
            fp.layer_gamma.push_back(gamma);
        }
        fp.summary_matrix = ad::concat_cols(fp.layer_gamma);
        auto [alpha, gamma] = across_layer_attention(fp.summary_matrix, across_attn_);
        fp.across_alpha = alpha;
        fp.across_gamma = gamma;
        fp.logit = ad::add(ad::matmul(head_weight_, gamma), head_bias_);
        fp.probability = ad::sigmoid(fp.logit);
        return fp;
    }

    // Plain-TCN head: same conv stack, classification from the last time
    // column of the deepest layer; no attention.
    ForwardPass tcn_forward(std::span<const double> x) const {
        ForwardPass fp;
        fp.hidden = conv_stack(x);
        auto last = ad::column(fp.hidden.back(), cfg_.input_length - 1);
        fp.logit = ad::add(ad::matmul(head_weight_, last), head_bias_);
        fp.probability = ad::sigmoid(fp.logit);
        return fp;
    }

    ForwardPass forward(std::span<const double> x, Variant v) const {
        return v == Variant::hatcn ? forward(x) : tcn_forward(x);
    }

    // Trainable parameters for the given head; the tcn variant does not touch
    // the attention vectors.
    std::vector<ad::NodePtr> parameters(Variant v) const {
        std::vector<ad::NodePtr> ps;
        for (std::size_t i = 0; i < cfg_.layers; ++i) {
            ps.push_back(kernels_[i]);
            ps.push_back(conv_biases_[i]);
        }
        if (v == Variant::hatcn) {
            for (const auto& w : layer_attn_) ps.push_back(w);
            ps.push_back(across_attn_);
        }
        ps.push_back(head_weight_);
        ps.push_back(head_bias_);
        return ps;
    }

    std::vector<ad::NodePtr> all_parameters() const { return parameters(Variant::hatcn); }

    void zero_grad(Variant v) const {
        for (const auto& p : parameters(v)) p->zero_grad();
    }

    bool parameters_finite() const {
        for (const auto& p : all_parameters())
            if (!p->value.all_finite()) return false;
        return true;
    }

    // Direct parameter access (checkpointing, tests).
    ad::NodePtr kernel(std::size_t layer) const { return kernels_[layer]; }
    ad::NodePtr conv_bias(std::size_t layer) const { return conv_biases_[layer]; }
    ad::NodePtr layer_attention(std::size_t layer) const { return layer_attn_[layer]; }
    ad::NodePtr across_attention() const { return across_attn_; }
    ad::NodePtr head_weight() const { return head_weight_; }
    ad::NodePtr head_bias() const { return head_bias_; }

private:
    std::vector<ad::NodePtr> conv_stack(std::span<const double> x) const {
        if (x.size() != cfg_.input_length)
            throw DataError("forward: series length " + std::to_string(x.size()) +
                            " does not match configured input length " +
                            std::to_string(cfg_.input_length));
        auto cur = ad::constant(Grid::row({x.begin(), x.end()}));
        std::vector<ad::NodePtr> hidden;
        for (std::size_t i = 0; i < cfg_.layers; ++i) {
            ad::ConvSpec spec{i == 0 ? std::size_t{1} : cfg_.channels, cfg_.channels,
                              cfg_.kernel, cfg_.dilations[i]};
            cur = ad::relu(ad::dilated_causal_conv(cur, kernels_[i], conv_biases_[i], spec));
            hidden.push_back(cur);
        }
        return hidden;
    }

    ModelConfig cfg_;
    std::vector<ad::NodePtr> kernels_;
    std::vector<ad::NodePtr> conv_biases_;
    std::vector<ad::NodePtr> layer_attn_;
    ad::NodePtr across_attn_;
    ad::NodePtr head_weight_;
    ad::NodePtr head_bias_;
};

}  // namespace hatcn
