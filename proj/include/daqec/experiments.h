// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace daqec {

inline constexpr const char *kVersion = "0.1.0";

/// Trials handled by one work item. Fixed so that the split of a run into
/// seeded work items never depends on the thread count.
inline constexpr uint64_t kChunkTrials = 1000;

/// Thrown for malformed or out-of-range configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PnlParams {
    std::vector<int> depths;  // empty: 14 geometric points from 2 to 400
    double p_local = 2e-4;
    double p_remote = 2e-3;
};

struct CorrelatedParams {
    std::vector<double> mean_rates;  // empty: 8 log-spaced points 2e-3..5e-2
    double std_ratio = 0.5;
    /// "exact": per-trial exact block failure probabilities for the sampled
    /// rates. "sampled": one Pauli draw per qubit per trial.
    std::string estimator = "exact";
};

struct BoundParams {
    std::vector<int> n_list{3, 7, 20};
    std::vector<double> mean_rates;  // empty: 8 log-spaced points 1e-3..5e-2
    double std_ratio = 0.5;
    double max_rate = 0.1;  // profiles are truncated to [0, max_rate]
    uint64_t lemma_cases = 10000;
    double median_ratio_max_mean = 0.01;
};

struct WStateParams {
    int max_block = 8;  // largest n + n_e
    int max_erased = 3;
    int random_unitaries = 100;
    int random_states = 20;
};

struct AllocationReportParams {
    int max_ell_c = 25;
    std::vector<int> n_p_list{2, 3, 4};
    int64_t d_enc_dec = 7;
    int brute_max_ell_c = 9;
    int brute_max_n_p = 3;
};

struct ApplesParams {
    std::vector<double> bins{0.6, 0.2, 0.05};
};

struct ExperimentConfig {
    std::string experiment;
    uint64_t seed = 1;
    uint64_t trials = 0;  // 0 selects the experiment's default
    int threads = 0;      // 0 selects the hardware concurrency

    PnlParams pnl;
    CorrelatedParams correlated;
    BoundParams bound;
    WStateParams wstate;
    AllocationReportParams allocation;
    ApplesParams apples;

    /// Parses {experiment, seed, trials, threads, params{...}}. Unknown keys
    /// are errors. `experiment` may be omitted from the file when supplied
    /// here; if both are given they must agree.
    static ExperimentConfig from_json(const nlohmann::json &j, const std::string &experiment = "");

    /// Fills defaults (trials, grids, threads) and validates. Throws ConfigError.
    void resolve();

    /// Every field of the active experiment, defaults included.
    nlohmann::json to_json() const;
};

const std::vector<std::string> &experiment_names();

struct ExperimentResult {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    nlohmann::json summary;  // experiment-specific findings and checks
    bool passed = true;      // every check in `summary["checks"]` held

    std::string csv() const;
};

/// Dispatches on config.experiment. The config must already be resolved.
ExperimentResult run_experiment(const ExperimentConfig &config);

ExperimentResult run_pnl_sweep(const ExperimentConfig &config);
ExperimentResult run_correlated_errors(const ExperimentConfig &config);
ExperimentResult run_bound_validate(const ExperimentConfig &config);
ExperimentResult run_wstate_verify(const ExperimentConfig &config);
ExperimentResult run_allocation_report(const ExperimentConfig &config);
ExperimentResult run_apples(const ExperimentConfig &config);

/// True for the modes whose checks decide the exit status.
bool is_verify_mode(const std::string &experiment);

// ---------------------------------------------------------------------------
// Helpers shared with the tests

/// Runs fn(0..n-1) on `threads` workers pulling indices from a shared counter.
/// The first exception thrown by any item is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)> &fn);

/// `count` points geometric from lo to hi, rounded, duplicates dropped.
std::vector<int> geometric_int_grid(int lo, int hi, int count);
std::vector<double> log_grid(double lo, double hi, int count);

/// 1.96 sqrt(p (1 - p) / n) with p = successes / n.
double binomial_ci_half_width(uint64_t successes, uint64_t n);
/// 1.96 times the standard error of a sample mean from its running sums.
double mean_ci_half_width(double sum, double sum_sq, uint64_t n);

struct SchemePoint {
    int depth = 0;
    double lqec = 0;
    double lqec_ci = 0;
    double dqec = 0;
    double dqec_ci = 0;
};

struct Crossover {
    bool found = false;
    int depth = 0;  // smallest tested depth with dqec >= lqec
    /// Every tested depth >= 2 * depth has dqec - dqec_ci > lqec + lqec_ci.
    bool separated_beyond_double = false;
    /// At the smallest tested depth lqec >= dqec.
    bool local_wins_shallow = false;
};

/// Points must be sorted by depth.
Crossover find_crossover(const std::vector<SchemePoint> &points);

/// Fixed-format rendering used in every CSV: %.10g.
std::string fmt(double v);

}  // namespace daqec
