#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

// Spawns the real binary (path injected by the build) and checks the
// documented command surface: artifacts, exit codes, determinism, config
// precedence.

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(HATCN_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + cmd);
    RunResult r;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// Fresh scratch directory per test.
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("hatcn_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    EXPECT_TRUE(in) << p;
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Tiny labeled cohort in the wide CSV format: plateau plus exponential tail,
// slow for patients, fast for healthy. Short series; the tool pads to 750.
void write_cohort(const fs::path& csv, std::size_t subjects_per_class, std::size_t trials,
                  bool both_classes = true) {
    std::ofstream out(csv);
    out << "series_id,subject_id,label,values\n";
    for (int label : {1, 0}) {
        if (!both_classes && label == 0) continue;
        for (std::size_t subj = 0; subj < subjects_per_class; ++subj)
            for (std::size_t trial = 0; trial < trials; ++trial) {
                const double tau = (label ? 20.0 : 3.0) + 0.1 * static_cast<double>(subj);
                const std::string sid = (label ? "P" : "H") + std::to_string(subj);
                out << sid << "-" << trial << "," << sid << "," << label;
                for (std::size_t t = 0; t < 64; ++t) {
                    const double v =
                        t < 32 ? 1.0 - 0.001 * static_cast<double>((subj + trial + t) % 7)
                               : std::exp(-static_cast<double>(t - 32) / tau);
                    out << "," << v;
                }
                out << "\n";
            }
    }
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, HelpListsEverySubcommand) {
    auto r = run_cli("--help");
    EXPECT_EQ(r.exit_code, 0);
    for (const char* sub :
         {"gen-data", "train", "eval", "cv", "explain", "baseline", "plot"})
        EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
}

TEST(Cli, SubcommandHelpDocumentsFlags) {
    auto cv = run_cli("cv --help");
    EXPECT_EQ(cv.exit_code, 0);
    for (const char* flag : {"--seed", "--out", "--data", "--model", "--layers", "--channels",
                             "--kernel", "--folds", "--repeats", "--epochs", "--lr", "--batch",
                             "--jobs", "--config"})
        EXPECT_NE(cv.output.find(flag), std::string::npos) << flag;
    auto ex = run_cli("explain --help");
    EXPECT_EQ(ex.exit_code, 0);
    for (const char* flag : {"--checkpoint", "--series", "--layer-pct", "--step-pct"})
        EXPECT_NE(ex.output.find(flag), std::string::npos) << flag;
}

TEST(Cli, BareInvocationAndUnknownFlagsAreUsageErrors) {
    EXPECT_EQ(run_cli("").exit_code, 1);
    EXPECT_EQ(run_cli("cv --bogus-flag").exit_code, 1);
    EXPECT_EQ(run_cli("no-such-subcommand").exit_code, 1);
}

TEST(Cli, GenDataIsByteDeterministic) {
    const auto dir = scratch("gendata");
    auto a = run_cli("gen-data --seed 11 --out " + q(dir / "a"));
    auto b = run_cli("gen-data --seed 11 --out " + q(dir / "b"));
    ASSERT_EQ(a.exit_code, 0) << a.output;
    ASSERT_EQ(b.exit_code, 0);
    EXPECT_EQ(slurp(dir / "a" / "series.csv"), slurp(dir / "b" / "series.csv"));
    EXPECT_EQ(slurp(dir / "a" / "annotations.json"), slurp(dir / "b" / "annotations.json"));
    EXPECT_GT(slurp(dir / "a" / "series.csv").size(), 100000u);  // a real cohort
}

TEST(Cli, TrainEvalExplainRoundTrip) {
    const auto dir = scratch("roundtrip");
    write_cohort(dir / "series.csv", 3, 2);
    auto tr = run_cli("train --data " + q(dir / "series.csv") + " --out " + q(dir / "run") +
                      " --layers 1 --channels 1 --kernel 2 --epochs 2 --lr 0.01 --seed 4");
    ASSERT_EQ(tr.exit_code, 0) << tr.output;
    EXPECT_TRUE(fs::exists(dir / "run" / "model.bin"));
    const auto loss = slurp(dir / "run" / "loss.csv");
    EXPECT_EQ(loss.rfind("epoch,loss\n", 0), 0u);
    EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 3);  // header + 2 epochs

    auto ev = run_cli("eval --checkpoint " + q(dir / "run" / "model.bin") + " --data " +
                      q(dir / "series.csv") + " --out " + q(dir / "run"));
    ASSERT_EQ(ev.exit_code, 0) << ev.output;
    auto metrics = nlohmann::json::parse(slurp(dir / "run" / "metrics.json"));
    EXPECT_EQ(metrics["tp"].get<int>() + metrics["fp"].get<int>() +
                  metrics["fn"].get<int>() + metrics["tn"].get<int>(),
              12);

    auto ex = run_cli("explain --checkpoint " + q(dir / "run" / "model.bin") + " --series " +
                      q(dir / "series.csv") + " --out " + q(dir / "expl") +
                      " --layer-pct 0.5 --step-pct 0.1");
    ASSERT_EQ(ex.exit_code, 0) << ex.output;
    auto j = nlohmann::json::parse(slurp(dir / "expl" / "explain_P0-0.json"));
    EXPECT_EQ(j["series_id"], "P0-0");
    ASSERT_GE(j["segments"].size(), 1u);
    for (const auto& seg : j["segments"]) {
        EXPECT_LE(seg["begin"].get<int>(), seg["end"].get<int>());
        EXPECT_LT(seg["end"].get<int>(), 750);
    }
    EXPECT_TRUE(fs::exists(dir / "expl" / "explain_P0-0.svg"));
    EXPECT_TRUE(fs::exists(dir / "expl" / "mean_freq_by_class.csv"));
    EXPECT_TRUE(fs::exists(dir / "expl" / "mean_freq_by_class.svg"));
}

TEST(Cli, CvWritesArtifactsAndIsSeedDeterministic) {
    const auto dir = scratch("cv");
    write_cohort(dir / "series.csv", 4, 2);
    const std::string common = "cv --data " + q(dir / "series.csv") +
                               " --layers 1 --channels 1 --kernel 2 --epochs 1 --lr 0.01"
                               " --folds 2 --repeats 1 --seed 21";
    auto a = run_cli(common + " --out " + q(dir / "a"));
    ASSERT_EQ(a.exit_code, 0) << a.output;
    for (const char* f : {"results.json", "metrics.json", "summary.csv"})
        EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;

    auto b = run_cli(common + " --out " + q(dir / "b") + " --jobs 2");
    ASSERT_EQ(b.exit_code, 0) << b.output;
    EXPECT_EQ(slurp(dir / "a" / "metrics.json"), slurp(dir / "b" / "metrics.json"));

    auto results = nlohmann::json::parse(slurp(dir / "a" / "results.json"));
    EXPECT_TRUE(results.contains("total_seconds"));
    EXPECT_EQ(results["folds"].size(), 2u);
    EXPECT_EQ(slurp(dir / "a" / "summary.csv").rfind("model,accuracy_mean", 0), 0u);
}

TEST(Cli, CvDepthListWritesSweepCsv) {
    const auto dir = scratch("sweep");
    write_cohort(dir / "series.csv", 4, 1);
    auto r = run_cli("cv --data " + q(dir / "series.csv") + " --out " + q(dir / "out") +
                     " --layers 1,2 --channels 1 --kernel 2 --epochs 1 --lr 0.01"
                     " --folds 2 --repeats 1 --seed 3");
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto csv = slurp(dir / "out" / "depth_sweep.csv");
    EXPECT_EQ(csv.rfind("layers,hatcn_accuracy_mean", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);  // header + 2 depths
}

TEST(Cli, BaselineWritesFeaturesAndMetrics) {
    const auto dir = scratch("baseline");
    write_cohort(dir / "series.csv", 4, 2);
    auto r = run_cli("baseline --data " + q(dir / "series.csv") + " --out " + q(dir / "out") +
                     " --folds 2 --repeats 2 --seed 13");
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto csv = slurp(dir / "out" / "baseline_features.csv");
    EXPECT_EQ(csv.rfind("series_id,subject_id,label,relax_start,rt90_5,censored,prediction", 0),
              0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);  // header + 16 series
    auto j = nlohmann::json::parse(slurp(dir / "out" / "baseline_metrics.json"));
    EXPECT_EQ(j["model"], "rt90_5_margin");
    EXPECT_EQ(j["folds"].size(), 4u);
    // the decay-rate gap is wide; the feature should separate it perfectly
    EXPECT_DOUBLE_EQ(j["mean_accuracy"].get<double>(), 1.0);
}

TEST(Cli, PlotRendersStoredCsvs) {
    const auto dir = scratch("plot");
    std::ofstream(dir / "loss.csv") << "epoch,loss\n1,0.7\n2,0.5\n3,0.45\n";
    std::ofstream(dir / "depth_sweep.csv")
        << "layers,hatcn_accuracy_mean,hatcn_accuracy_std,tcn_accuracy_mean,"
           "tcn_accuracy_std,hatcn_seconds,tcn_seconds\n2,0.95,0.01,0.9,0.02,10,8\n"
           "4,0.96,0.01,0.94,0.02,21,16\n";
    auto r = run_cli("plot --data " + q(dir) + " --out " + q(dir / "svg"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(slurp(dir / "svg" / "loss.svg").find("<svg"), std::string::npos);
    EXPECT_NE(slurp(dir / "svg" / "depth_accuracy.svg").find("<polyline"), std::string::npos);

    auto empty = run_cli("plot --data " + q(dir / "svg") + " --out " + q(dir / "svg2"));
    EXPECT_EQ(empty.exit_code, 2);  // nothing renderable
}

TEST(Cli, ExitCodesDistinguishFailureKinds) {
    const auto dir = scratch("exitcodes");
    write_cohort(dir / "series.csv", 2, 1);
    write_cohort(dir / "patients_only.csv", 2, 2, /*both_classes=*/false);

    // usage problems -> 1
    EXPECT_EQ(run_cli("eval --data " + q(dir / "series.csv")).exit_code, 1);
    EXPECT_EQ(run_cli("train --data " + q(dir / "series.csv") + " --lr 0 --out " +
                      q(dir / "x"))
                  .exit_code,
              1);
    EXPECT_EQ(run_cli("cv --data " + q(dir / "series.csv") + " --folds 50 --out " +
                      q(dir / "x") + " --epochs 1 --channels 1 --kernel 2 --layers 1")
                  .exit_code,
              1);
    // data problems -> 2
    EXPECT_EQ(run_cli("train --data " + q(dir / "missing.csv") + " --out " + q(dir / "x"))
                  .exit_code,
              2);
    EXPECT_EQ(run_cli("eval --checkpoint " + q(dir / "missing.bin") + " --data " +
                      q(dir / "series.csv"))
                  .exit_code,
              2);
    // training failure -> 3
    EXPECT_EQ(run_cli("train --data " + q(dir / "patients_only.csv") + " --out " + q(dir / "x") +
                      " --layers 1 --channels 1 --kernel 2 --epochs 1")
                  .exit_code,
              3);
}

TEST(Cli, ConfigFilePrecedenceAndValidation) {
    const auto dir = scratch("config");
    write_cohort(dir / "series.csv", 2, 2);
    std::ofstream(dir / "good.conf") << "# comment line\nepochs = 3\nlr = 0.01\n"
                                     << "channels = 1\nkernel = 2\nlayers = 1\n";
    // config alone: 3 epochs
    auto a = run_cli("train --data " + q(dir / "series.csv") + " --out " + q(dir / "a") +
                     " --config " + q(dir / "good.conf"));
    ASSERT_EQ(a.exit_code, 0) << a.output;
    const auto loss_a = slurp(dir / "a" / "loss.csv");
    EXPECT_EQ(std::count(loss_a.begin(), loss_a.end(), '\n'), 4);  // header + 3 epochs
    // flag beats config: 1 epoch
    auto b = run_cli("train --data " + q(dir / "series.csv") + " --out " + q(dir / "b") +
                     " --config " + q(dir / "good.conf") + " --epochs 1");
    ASSERT_EQ(b.exit_code, 0) << b.output;
    const auto loss_b = slurp(dir / "b" / "loss.csv");
    EXPECT_EQ(std::count(loss_b.begin(), loss_b.end(), '\n'), 2);

    std::ofstream(dir / "bad_key.conf") << "epochz = 3\n";
    EXPECT_EQ(run_cli("train --data " + q(dir / "series.csv") + " --out " + q(dir / "c") +
                      " --config " + q(dir / "bad_key.conf"))
                  .exit_code,
              1);
    std::ofstream(dir / "bad_line.conf") << "epochs\n";
    EXPECT_EQ(run_cli("train --data " + q(dir / "series.csv") + " --out " + q(dir / "c") +
                      " --config " + q(dir / "bad_line.conf"))
                  .exit_code,
              1);
    EXPECT_EQ(run_cli("train --data " + q(dir / "series.csv") + " --out " + q(dir / "c") +
                      " --config " + q(dir / "nofile.conf"))
                  .exit_code,
              1);
}

TEST(Cli, ExplainRejectsTcnCheckpoints) {
    const auto dir = scratch("explain_tcn");
    write_cohort(dir / "series.csv", 2, 2);
    auto tr = run_cli("train --data " + q(dir / "series.csv") + " --out " + q(dir / "run") +
                      " --model tcn --layers 1 --channels 1 --kernel 2 --epochs 1");
    ASSERT_EQ(tr.exit_code, 0) << tr.output;
    auto ex = run_cli("explain --checkpoint " + q(dir / "run" / "model.bin") + " --series " +
                      q(dir / "series.csv") + " --out " + q(dir / "expl"));
    EXPECT_EQ(ex.exit_code, 1);
    EXPECT_NE(ex.output.find("tcn"), std::string::npos);
}
