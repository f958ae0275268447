// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "daqec/experiments.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCheck = 3;

nlohmann::json load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw daqec::ConfigError("cannot open config '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw daqec::ConfigError("cannot parse config '" + path + "': " + e.what());
    }
}

void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Distributed W-state and Steane code experiments"};
    std::string experiment;
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<uint64_t> trials;
    std::optional<int> threads;
    std::string out_dir = ".";
    app.add_option("experiment", experiment, "Experiment to run")
        ->required()
        ->check(CLI::IsMember(daqec::experiment_names()));
    app.add_option("--config", config_path, "JSON config file")->required();
    app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--trials", trials, "Trials per point (overrides the config)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--threads", threads, "Worker threads; 0 uses every core");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    daqec::ExperimentConfig config;
    try {
        config = daqec::ExperimentConfig::from_json(load_config(config_path), experiment);
        if (seed) {
            config.seed = *seed;
        }
        if (trials) {
            config.trials = *trials;
        }
        if (threads) {
            config.threads = *threads;
        }
        config.resolve();
    } catch (const daqec::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    auto start = std::chrono::steady_clock::now();
    daqec::ExperimentResult result;
    try {
        result = daqec::run_experiment(config);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::json summary;
    summary["experiment"] = config.experiment;
    summary["config"] = config.to_json();
    summary["version"] = daqec::kVersion;
    summary["compiler"] = __VERSION__;
    summary["wall_time_seconds"] = wall;
    summary["rows"] = result.rows.size();
    summary["results"] = result.summary;

    try {
        std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        write_file(dir / (config.experiment + ".csv"), result.csv());
        write_file(dir / (config.experiment + ".summary.json"), summary.dump(2) + "\n");
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::cout << config.experiment << ": " << result.rows.size() << " rows, "
              << (result.passed ? "checks passed" : "checks failed") << ", " << wall << " s\n";
    if (daqec::is_verify_mode(config.experiment) && !result.passed) {
        return kExitCheck;
    }
    return 0;
}
