// Command-line front end: data generation, training, evaluation,
// cross-validation, explanation, the relaxation-time baseline, and plot
// rendering. Exit codes: 0 ok, 1 usage or config problem, 2 bad data,
// 3 training failure.

#include <CLI11.hpp>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "hatcn/baseline.hpp"
#include "hatcn/checkpoint.hpp"
#include "hatcn/cross_validate.hpp"
#include "hatcn/data.hpp"
#include "hatcn/explain.hpp"
#include "hatcn/io.hpp"
#include "hatcn/model.hpp"
#include "hatcn/report.hpp"
#include "hatcn/svg.hpp"
#include "hatcn/synth.hpp"
#include "hatcn/train.hpp"

namespace fs = std::filesystem;
using namespace hatcn;

namespace {

// ---------------------------------------------------------------------------
// Small file helpers
// ---------------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string sanitize_id(const std::string& id) {
    std::string s = id;
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return s;
}

// --data accepts either a series CSV or a directory holding series.csv; an
// annotations.json sidecar is picked up when present.
Dataset load_dataset(const std::string& path) {
    fs::path p(path);
    fs::path csv = p;
    fs::path ann;
    if (fs::is_directory(p)) {
        csv = p / "series.csv";
        if (!fs::exists(csv))
            throw DataError("no series.csv in directory '" + path + "'");
        ann = p / "annotations.json";
    } else {
        ann = p.parent_path() / "annotations.json";
    }
    Dataset d = read_series_csv(csv.string());
    if (!ann.empty() && fs::exists(ann)) d.annotations = read_annotations(ann.string());
    return d;
}

std::vector<std::size_t> all_indices(const Dataset& d) {
    std::vector<std::size_t> idx(d.series.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

// ---------------------------------------------------------------------------
// Config file: flat `key = value` lines, applied wherever the flag was not
// given on the command line (flags > config > defaults).
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
void set_from_string(T& target, const std::string& value, const std::string& key) {
    if constexpr (std::is_same_v<T, std::string>) {
        target = value;
    } else if constexpr (std::is_floating_point_v<T>) {
        std::size_t used = 0;
        try {
            target = std::stod(value, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != value.size())
            throw ConfigError("config: key '" + key + "': '" + value + "' is not a number");
    } else {
        static_assert(std::is_integral_v<T>);
        std::size_t used = 0;
        unsigned long long parsed = 0;
        try {
            parsed = std::stoull(value, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != value.size() || value.find('-') != std::string::npos)
            throw ConfigError("config: key '" + key + "': '" + value +
                              "' is not a nonnegative integer");
        target = static_cast<T>(parsed);
    }
}

// Every option a subcommand registers lands here, so config keys resolve to
// the same storage the flags write to.
struct Registry {
    std::map<std::string, std::pair<CLI::Option*, std::function<void(const std::string&)>>>
        entries;

    template <class T>
    CLI::Option* add(CLI::App* cmd, const std::string& flag, T& target,
                     const std::string& desc) {
        CLI::Option* opt = cmd->add_option(flag, target, desc);
        entries[flag.substr(2)] = {
            opt, [&target, flag](const std::string& v) { set_from_string(target, v, flag); }};
        return opt;
    }

    void apply_config(const std::string& path) const {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open '" + path + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            const auto it = entries.find(key);
            if (it == entries.end())
                throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                                  ": unknown key '" + key + "' for this subcommand");
            if (it->second.first->count() == 0) it->second.second(value);
        }
    }
};

std::vector<std::size_t> parse_depth_list(const std::string& s) {
    std::vector<std::size_t> depths;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string item =
            trim(comma == std::string::npos ? s.substr(pos) : s.substr(pos, comma - pos));
        std::size_t v = 0;
        set_from_string(v, item, "--layers");
        if (v == 0) throw ConfigError("--layers: depth must be >= 1");
        depths.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return depths;
}

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

struct Options {
    std::uint64_t seed = 1;
    std::string out = ".";
    std::string data;
    std::string model = "hatcn";
    std::string layers = "2";  // cv accepts a comma list for depth sweeps
    std::size_t channels = 4;
    std::size_t kernel = 50;
    std::size_t folds = 10;
    std::size_t repeats = 5;
    std::size_t epochs = 100;
    double lr = 1e-3;
    std::size_t batch = 32;
    double layer_pct = 0.10;
    double step_pct = 0.10;
    std::size_t jobs = 1;
    std::string checkpoint;
    std::string series;
    std::string config;
};

std::size_t single_depth(const std::string& layers) {
    const auto depths = parse_depth_list(layers);
    if (depths.size() != 1)
        throw UsageError("--layers: this subcommand takes a single depth");
    return depths[0];
}

ModelConfig model_config(const Options& o, std::size_t depth) {
    ModelConfig mc;
    mc.layers = depth;
    mc.channels = o.channels;
    mc.kernel = o.kernel;
    mc.input_length = 750;
    mc.finalize();
    return mc;
}

TrainConfig train_config(const Options& o) {
    TrainConfig tc;
    tc.epochs = o.epochs;
    tc.lr = o.lr;
    tc.batch = o.batch;
    tc.variant = variant_from_string(o.model);
    tc.validate();
    return tc;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_gen_data(const Options& o) {
    SynthConfig sc;
    sc.seed = o.seed;
    sc.validate();
    const Dataset data = generate_synthetic(sc);
    fs::create_directories(o.out);
    write_series_csv_wide((fs::path(o.out) / "series.csv").string(), data);
    write_annotations((fs::path(o.out) / "annotations.json").string(), data.annotations);
    std::size_t patients = 0;
    for (const auto& s : data.series) patients += s.label == 1 ? 1 : 0;
    std::cout << "wrote " << data.series.size() << " series (" << patients << " patient, "
              << data.series.size() - patients << " healthy) to " << o.out << "\n";
    return 0;
}

int run_train(const Options& o) {
    if (o.data.empty()) throw UsageError("train: --data is required");
    const auto mc = model_config(o, single_depth(o.layers));
    auto tc = train_config(o);
    tc.seed = derive_seed(o.seed, 0, 0, SeedPurpose::train);
    const Dataset ds = preprocess(load_dataset(o.data), mc.input_length);

    auto model = Model::init(mc, derive_seed(o.seed, 0, 0, SeedPurpose::init));
    const auto result = train(model, ds, all_indices(ds), tc);

    fs::create_directories(o.out);
    save_checkpoint((fs::path(o.out) / "model.bin").string(), model, tc.variant, o.seed,
                    tc.epochs);
    write_text(fs::path(o.out) / "loss.csv", loss_csv(result.loss_curve));
    std::cout << "trained " << o.model << " on " << ds.series.size() << " series; final loss "
              << result.loss_curve.back() << "; checkpoint in " << o.out << "\n";
    return 0;
}

int run_eval(const Options& o) {
    if (o.checkpoint.empty()) throw UsageError("eval: --checkpoint is required");
    if (o.data.empty()) throw UsageError("eval: --data is required");
    const auto c = load_checkpoint(o.checkpoint);
    const Dataset ds = preprocess(load_dataset(o.data), c.config.input_length);
    const auto metrics = evaluate(c.model, ds, all_indices(ds), c.variant);
    const auto j = metrics_json(metrics);
    std::cout << j.dump(2) << "\n";
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "metrics.json", j.dump(2) + "\n");
    return 0;
}

int run_cv(const Options& o) {
    if (o.data.empty()) throw UsageError("cv: --data is required");
    const auto depths = parse_depth_list(o.layers);

    CvConfig cfg;
    cfg.train = train_config(o);
    cfg.model = model_config(o, depths[0]);
    cfg.folds = o.folds;
    cfg.repeats = o.repeats;
    cfg.master_seed = o.seed;
    cfg.jobs = o.jobs;
    const Dataset ds = preprocess(load_dataset(o.data), cfg.model.input_length);
    fs::create_directories(o.out);

    if (depths.size() > 1) {
        // depth sweep: both variants per depth, one CSV matching the plot axes
        const auto sweep = depth_sweep(ds, cfg, depths);
        write_text(fs::path(o.out) / "depth_sweep.csv", depth_sweep_csv(sweep));
        for (const auto& d : sweep)
            std::cout << "layers " << d.layers << ": hatcn " << d.hatcn.mean_accuracy
                      << ", tcn " << d.tcn.mean_accuracy << "\n";
        return 0;
    }

    const auto cv = cross_validate(ds, cfg);
    write_text(fs::path(o.out) / "results.json", cv_results_json(cv, cfg).dump(2) + "\n");
    write_text(fs::path(o.out) / "metrics.json",
               cv_metrics_json(cv, cfg.train.variant).dump(2) + "\n");
    write_text(fs::path(o.out) / "summary.csv",
               cv_summary_csv_header() + cv_summary_csv_row(cv, cfg.train.variant));
    std::cout << o.model << ": accuracy " << cv.mean_accuracy << " +- " << cv.std_accuracy
              << ", f1 " << cv.mean_f1 << " +- " << cv.std_f1 << " over " << cv.folds.size()
              << " folds\n";
    return 0;
}

int run_explain(const Options& o) {
    if (o.checkpoint.empty()) throw UsageError("explain: --checkpoint is required");
    if (o.series.empty()) throw UsageError("explain: --series is required");
    const auto c = load_checkpoint(o.checkpoint);
    if (c.variant != Variant::hatcn)
        throw UsageError("explain: checkpoint was trained as plain tcn; its attention "
                         "weights are untrained and explain nothing");
    const Dataset ds = preprocess(load_dataset(o.series), c.config.input_length);
    fs::create_directories(o.out);

    const std::size_t T = c.config.input_length;
    std::vector<double> sum_patient(T, 0.0), sum_healthy(T, 0.0);
    std::size_t n_patient = 0, n_healthy = 0;
    for (const auto& s : ds.series) {
        const auto e = explain_series(c.model, s.values, o.layer_pct, o.step_pct);
        const auto base = "explain_" + sanitize_id(s.id);
        write_text(fs::path(o.out) / (base + ".json"),
                   explanation_json(s.id, e).dump(2) + "\n");
        write_text(fs::path(o.out) / (base + ".svg"),
                   svg::series_explanation(s.values, e.profile, s.id));
        auto& sum = s.label == 1 ? sum_patient : sum_healthy;
        (s.label == 1 ? n_patient : n_healthy) += 1;
        for (std::size_t t = 0; t < T; ++t)
            sum[t] += static_cast<double>(e.profile.freq[t]);
    }

    if (n_patient > 0 && n_healthy > 0) {
        for (auto& v : sum_patient) v /= static_cast<double>(n_patient);
        for (auto& v : sum_healthy) v /= static_cast<double>(n_healthy);
        std::string csv = "t,patient_mean,healthy_mean\n";
        for (std::size_t t = 0; t < T; ++t)
            csv += std::to_string(t) + "," + hatcn::detail::fmt(sum_patient[t]) + "," +
                   hatcn::detail::fmt(sum_healthy[t]) + "\n";
        write_text(fs::path(o.out) / "mean_freq_by_class.csv", csv);
        write_text(fs::path(o.out) / "mean_freq_by_class.svg",
                   svg::class_mean_freq(sum_patient, sum_healthy));
    }
    std::cout << "explained " << ds.series.size() << " series into " << o.out << "\n";
    return 0;
}

int run_baseline(const Options& o) {
    if (o.data.empty()) throw UsageError("baseline: --data is required");
    const Dataset ds = load_dataset(o.data);  // raw series; the feature is scale-free
    const auto cv = baseline_cross_validate(ds, o.folds, o.repeats, o.seed);

    // feature table with in-sample predictions from a fit on everything
    std::vector<std::pair<double, int>> samples;
    std::vector<BaselineFeature> features;
    for (const auto& s : ds.series) {
        features.push_back(baseline_feature(s.values));
        samples.emplace_back(features.back().rt90_5, s.label);
    }
    const auto classifier = train_margin_classifier(samples);
    std::string csv = baseline_features_csv_header();
    for (std::size_t i = 0; i < ds.series.size(); ++i)
        csv += baseline_feature_csv_row(ds.series[i], features[i],
                                        classifier.classify(features[i].rt90_5));

    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "baseline_features.csv", csv);
    auto j = cv_metrics_json(cv, Variant::hatcn);
    j["model"] = "rt90_5_margin";
    write_text(fs::path(o.out) / "baseline_metrics.json", j.dump(2) + "\n");
    std::cout << "baseline: accuracy " << cv.mean_accuracy << " +- " << cv.std_accuracy
              << ", f1 " << cv.mean_f1 << " over " << cv.folds.size() << " folds\n";
    return 0;
}

// Re-read stored CSV artifacts for the plot subcommand.
std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(hatcn::detail::split_csv_line(line));
    }
    if (rows.size() < 2) throw DataError("'" + path.string() + "': no data rows");
    return rows;
}

double csv_number(const std::vector<std::string>& row, std::size_t col, const fs::path& path) {
    if (col >= row.size())
        throw DataError("'" + path.string() + "': missing column " + std::to_string(col));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(row[col], &used);
    } catch (const std::exception&) {
        used = std::string::npos;
    }
    if (used != row[col].size())
        throw DataError("'" + path.string() + "': bad number '" + row[col] + "'");
    return v;
}

int run_plot(const Options& o) {
    if (o.data.empty()) throw UsageError("plot: --data is required (a results directory)");
    const fs::path dir(o.data);
    fs::create_directories(o.out);
    bool rendered = false;

    if (fs::exists(dir / "loss.csv")) {
        const auto rows = read_csv_rows(dir / "loss.csv");
        std::vector<double> curve;
        for (std::size_t i = 1; i < rows.size(); ++i)
            curve.push_back(csv_number(rows[i], 1, dir / "loss.csv"));
        write_text(fs::path(o.out) / "loss.svg", svg::loss_curve(curve));
        rendered = true;
    }
    if (fs::exists(dir / "depth_sweep.csv")) {
        const auto rows = read_csv_rows(dir / "depth_sweep.csv");
        std::vector<DepthResult> sweep;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            DepthResult d;
            d.layers = static_cast<std::size_t>(csv_number(rows[i], 0, dir / "depth_sweep.csv"));
            d.hatcn.mean_accuracy = csv_number(rows[i], 1, dir / "depth_sweep.csv");
            d.tcn.mean_accuracy = csv_number(rows[i], 3, dir / "depth_sweep.csv");
            sweep.push_back(d);
        }
        write_text(fs::path(o.out) / "depth_accuracy.svg", svg::depth_accuracy(sweep));
        rendered = true;
    }
    if (fs::exists(dir / "mean_freq_by_class.csv")) {
        const auto rows = read_csv_rows(dir / "mean_freq_by_class.csv");
        std::vector<double> patient, healthy;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            patient.push_back(csv_number(rows[i], 1, dir / "mean_freq_by_class.csv"));
            healthy.push_back(csv_number(rows[i], 2, dir / "mean_freq_by_class.csv"));
        }
        write_text(fs::path(o.out) / "mean_freq_by_class.svg",
                   svg::class_mean_freq(patient, healthy));
        rendered = true;
    }

    if (!rendered)
        throw DataError("plot: nothing to render in '" + o.data +
                        "' (expected loss.csv, depth_sweep.csv, or mean_freq_by_class.csv)");
    std::cout << "plots written to " << o.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical attention TCN for handgrip time-series screening"};
    app.require_subcommand(1);

    Options o;
    std::map<const CLI::App*, Registry> registries;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic handgrip cohort");
    auto* tr = app.add_subcommand("train", "train one model on a dataset");
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    auto* cv = app.add_subcommand("cv", "repeated subject-level cross-validation");
    auto* ex = app.add_subcommand("explain", "receptive-field relevance for stored series");
    auto* bl = app.add_subcommand("baseline", "relaxation-time margin-classifier baseline");
    auto* pl = app.add_subcommand("plot", "render stored result CSVs to SVG");

    for (auto* cmd : {gen, tr, ev, cv, ex, bl, pl}) {
        Registry& reg = registries[cmd];
        reg.add(cmd, "--out", o.out, "output directory");
        cmd->add_option("--config", o.config, "flat key = value config file");
        if (cmd == gen || cmd == tr || cmd == cv || cmd == bl)
            reg.add(cmd, "--seed", o.seed, "master seed");
        if (cmd == tr || cmd == ev || cmd == cv || cmd == bl || cmd == pl)
            reg.add(cmd, "--data", o.data, "series CSV or directory with series.csv");
        if (cmd == tr || cmd == cv) {
            reg.add(cmd, "--model", o.model, "hatcn or tcn");
            reg.add(cmd, "--layers", o.layers,
                    cmd == cv ? "hidden layers; comma list sweeps depths"
                              : "hidden layers");
            reg.add(cmd, "--channels", o.channels, "conv channels per layer");
            reg.add(cmd, "--kernel", o.kernel, "kernel filter size");
            reg.add(cmd, "--epochs", o.epochs, "training epochs");
            reg.add(cmd, "--lr", o.lr, "learning rate");
            reg.add(cmd, "--batch", o.batch, "mini-batch size");
        }
        if (cmd == cv || cmd == bl) {
            reg.add(cmd, "--folds", o.folds, "cross-validation folds");
            reg.add(cmd, "--repeats", o.repeats, "repeats of the full k-fold");
        }
        if (cmd == cv) reg.add(cmd, "--jobs", o.jobs, "parallel fold workers");
        if (cmd == ev || cmd == ex)
            reg.add(cmd, "--checkpoint", o.checkpoint, "model checkpoint file");
        if (cmd == ex) {
            reg.add(cmd, "--series", o.series, "series CSV or directory to explain");
            reg.add(cmd, "--layer-pct", o.layer_pct, "top share of across-layer attention");
            reg.add(cmd, "--step-pct", o.step_pct, "top share of within-layer attention");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // any parse problem is a usage error
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        if (!o.config.empty()) registries[cmd].apply_config(o.config);
        if (cmd == gen) return run_gen_data(o);
        if (cmd == tr) return run_train(o);
        if (cmd == ev) return run_eval(o);
        if (cmd == cv) return run_cv(o);
        if (cmd == ex) return run_explain(o);
        if (cmd == bl) return run_baseline(o);
        return run_plot(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const TrainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
