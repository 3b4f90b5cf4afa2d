#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "hatcn/data.hpp"
#include "hatcn/errors.hpp"

// Synthetic handgrip cohort: each trial is a smooth squeeze, a noisy hold of
// roughly three seconds at maximum voluntary contraction, and an exponential
// release whose time constant separates the classes (delayed relaxation for
// patients). Stands in for the clinical recordings, with ground truth.

namespace hatcn {

struct SynthConfig {
    std::size_t patient_subjects = 37;
    std::size_t healthy_subjects = 18;
    std::size_t trials_min = 12;
    std::size_t trials_max = 15;
    std::size_t length = 750;
    double sample_rate = 25.0;           // samples per second
    double rise_min_s = 1.0, rise_max_s = 2.0;
    double hold_min_s = 2.8, hold_max_s = 3.2;
    double healthy_tau_min_s = 0.2, healthy_tau_max_s = 0.6;
    double patient_tau_min_s = 1.6, patient_tau_max_s = 3.6;
    double amplitude_min = 30.0, amplitude_max = 100.0;  // arbitrary force units
    double noise_amp = 0.02;  // Gaussian sigma as a fraction of the amplitude
    std::uint64_t seed = 1;

    void validate() const {
        auto ordered = [](double lo, double hi) { return lo > 0.0 && lo <= hi; };
        if (patient_subjects < 1 || healthy_subjects < 1)
            throw ConfigError("synth: both classes need at least one subject");
        if (trials_min < 1 || trials_min > trials_max)
            throw ConfigError("synth: invalid trials range");
        if (length < 8) throw ConfigError("synth: series length too short");
        if (sample_rate <= 0.0) throw ConfigError("synth: sample rate must be positive");
        if (!ordered(rise_min_s, rise_max_s) || !ordered(hold_min_s, hold_max_s) ||
            !ordered(healthy_tau_min_s, healthy_tau_max_s) ||
            !ordered(patient_tau_min_s, patient_tau_max_s))
            throw ConfigError("synth: duration ranges must satisfy 0 < min <= max");
        if (patient_tau_min_s <= healthy_tau_max_s)
            throw ConfigError("synth: patient tau range must sit strictly above healthy");
        if (amplitude_min <= 0.0 || amplitude_min > amplitude_max)
            throw ConfigError("synth: invalid amplitude range");
        if (noise_amp < 0.0) throw ConfigError("synth: noise amplitude must be >= 0");
    }
};

namespace detail {

inline std::string zero_padded(std::size_t n, int width) {
    std::string s = std::to_string(n);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace detail

inline Dataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    std::normal_distribution<double> gauss(0.0, 1.0);

    Dataset out;
    for (int label : {1, 0}) {
        const std::size_t subjects = label == 1 ? cfg.patient_subjects : cfg.healthy_subjects;
        const double tau_lo = label == 1 ? cfg.patient_tau_min_s : cfg.healthy_tau_min_s;
        const double tau_hi = label == 1 ? cfg.patient_tau_max_s : cfg.healthy_tau_max_s;
        const char prefix = label == 1 ? 'P' : 'H';

        for (std::size_t subj = 1; subj <= subjects; ++subj) {
            const std::string subject_id = prefix + detail::zero_padded(subj, 3);
            const double base_amplitude = uniform(cfg.amplitude_min, cfg.amplitude_max);
            const double subject_tau = uniform(tau_lo, tau_hi);
            const std::size_t trials =
                cfg.trials_min +
                static_cast<std::size_t>(rng() % (cfg.trials_max - cfg.trials_min + 1));

            for (std::size_t trial = 1; trial <= trials; ++trial) {
                const double m = base_amplitude * uniform(0.9, 1.1);
                // trial jitter, clamped into the class range to keep the
                // separability guarantee
                const double tau_s =
                    std::clamp(subject_tau * uniform(0.9, 1.1), tau_lo, tau_hi);
                const double tau = tau_s * cfg.sample_rate;  // in samples
                const std::size_t rise = static_cast<std::size_t>(
                    std::lround(uniform(cfg.rise_min_s, cfg.rise_max_s) * cfg.sample_rate));
                const std::size_t hold = static_cast<std::size_t>(
                    std::lround(uniform(cfg.hold_min_s, cfg.hold_max_s) * cfg.sample_rate));

                Series s;
                s.id = subject_id + "-T" + detail::zero_padded(trial, 2);
                s.subject_id = subject_id;
                s.label = label;
                s.sample_rate = cfg.sample_rate;
                s.values.resize(cfg.length, 0.0);

                // last hold sample doubles as the decay origin (e^0 = 1)
                const std::size_t relax_start =
                    std::min(rise + hold - 1, cfg.length - 2);
                for (std::size_t t = 0; t < cfg.length; ++t) {
                    double v;
                    if (t < rise)
                        v = m * 0.5 *
                            (1.0 - std::cos(M_PI * static_cast<double>(t) /
                                            static_cast<double>(rise)));
                    else if (t <= relax_start)
                        v = m;
                    else
                        v = m * std::exp(-static_cast<double>(t - relax_start) / tau);
                    if (cfg.noise_amp > 0.0) v += cfg.noise_amp * m * gauss(rng);
                    s.values[t] = std::max(v, 0.0);
                }

                Annotation a;
                a.series_id = s.id;
                a.relax_start = relax_start;
                a.relax_end = std::min(
                    relax_start + static_cast<std::size_t>(std::ceil(tau * std::log(20.0))),
                    cfg.length - 1);
                a.tau = tau;

                out.series.push_back(std::move(s));
                out.annotations.push_back(std::move(a));
            }
        }
    }
    return out;
}

}  // namespace hatcn
