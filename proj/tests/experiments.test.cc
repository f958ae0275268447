// SPDX-License-Identifier: Apache-2.0

#include "daqec/experiments.h"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

using namespace daqec;
using nlohmann::json;

namespace {

ExperimentConfig resolved(const json &j) {
    ExperimentConfig c = ExperimentConfig::from_json(j);
    c.resolve();
    return c;
}

std::size_t column(const ExperimentResult &r, const std::string &name) {
    for (std::size_t i = 0; i < r.columns.size(); i++) {
        if (r.columns[i] == name) {
            return i;
        }
    }
    throw std::runtime_error("no column " + name);
}

}  // namespace

TEST(config, parsing_and_defaults) {
    ExperimentConfig c = resolved({{"experiment", "pnl-sweep"}, {"seed", 9}, {"params", {{"p_local", 1e-3}}}});
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.trials, 100000u);
    EXPECT_GE(c.threads, 1);
    EXPECT_EQ(c.pnl.p_local, 1e-3);
    EXPECT_EQ(c.pnl.depths, (std::vector<int>{2, 3, 5, 7, 10, 15, 23, 35, 52, 78, 118, 177, 266, 400}));

    ExperimentConfig b = ExperimentConfig::from_json(json::object(), "bound-validate");
    b.resolve();
    EXPECT_EQ(b.trials, 10000u);
    EXPECT_EQ(b.bound.mean_rates.size(), 8u);
    EXPECT_NEAR(b.bound.mean_rates.front(), 1e-3, 1e-15);
    EXPECT_NEAR(b.bound.mean_rates.back(), 5e-2, 1e-15);

    ExperimentConfig round = ExperimentConfig::from_json(c.to_json());
    round.resolve();
    EXPECT_EQ(round.to_json(), c.to_json());
}

TEST(config, rejects_bad_input) {
    EXPECT_THROW(ExperimentConfig::from_json({{"experiment", "pnl-sweep"}, {"bogus", 1}}), ConfigError);
    EXPECT_THROW(ExperimentConfig::from_json({{"experiment", "apples"}, {"params", {{"depths", {2}}}}}), ConfigError);
    EXPECT_THROW(ExperimentConfig::from_json({{"experiment", "nope"}}), ConfigError);
    EXPECT_THROW(ExperimentConfig::from_json({{"experiment", "apples"}}, "pnl-sweep"), ConfigError);
    EXPECT_THROW(ExperimentConfig::from_json({{"experiment", "apples"}, {"seed", "x"}}), ConfigError);
    EXPECT_THROW(resolved({{"experiment", "pnl-sweep"}, {"trials", 10}}), ConfigError);
    EXPECT_THROW(resolved({{"experiment", "pnl-sweep"}, {"params", {{"p_remote", 2.0}}}}), ConfigError);
    EXPECT_THROW(resolved({{"experiment", "correlated-errors"}, {"params", {{"estimator", "x"}}}}), ConfigError);
    EXPECT_THROW(resolved({{"experiment", "apples"}, {"params", {{"bins", {0.1}}}}}), ConfigError);
    EXPECT_THROW(resolved({{"experiment", "allocation-report"}, {"params", {{"brute_max_ell_c", 12}}}}),
                 ConfigError);
}

TEST(helpers, grids_and_intervals) {
    EXPECT_EQ(geometric_int_grid(1, 4, 3), (std::vector<int>{1, 2, 4}));
    EXPECT_EQ(geometric_int_grid(1, 2, 10), (std::vector<int>{1, 2}));
    auto g = log_grid(1e-3, 1e-1, 3);
    EXPECT_NEAR(g[1], 1e-2, 1e-15);

    EXPECT_NEAR(binomial_ci_half_width(50, 100), 1.96 * 0.05, 1e-15);
    EXPECT_EQ(binomial_ci_half_width(100, 100), 0);
    // Sample {0, 1, 2}: variance 1, standard error 1/sqrt(3).
    EXPECT_NEAR(mean_ci_half_width(3, 5, 3), 1.96 / std::sqrt(3.0), 1e-12);

    EXPECT_EQ(fmt(0.5), "0.5");
    EXPECT_EQ(fmt(1.0 / 3), "0.3333333333");
}

TEST(helpers, parallel_for_covers_every_index) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (auto &h : hits) {
        EXPECT_EQ(h.load(), 1);
    }
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 7) {
                         throw std::runtime_error("x");
                     }
                 }),
                 std::runtime_error);
}

TEST(helpers, crossover) {
    std::vector<SchemePoint> pts{
        {2, 0.99, 0.001, 0.95, 0.001}, {5, 0.97, 0.001, 0.94, 0.001}, {10, 0.9, 0.001, 0.92, 0.001},
        {20, 0.8, 0.001, 0.9, 0.001},  {40, 0.6, 0.001, 0.85, 0.001},
    };
    Crossover x = find_crossover(pts);
    EXPECT_TRUE(x.found);
    EXPECT_EQ(x.depth, 10);
    EXPECT_TRUE(x.separated_beyond_double);
    EXPECT_TRUE(x.local_wins_shallow);

    pts[3].dqec = 0.8;
    EXPECT_FALSE(find_crossover(pts).separated_beyond_double);
    for (auto &p : pts) {
        p.dqec = 0.1;
    }
    EXPECT_FALSE(find_crossover(pts).found);
}

TEST(pnl, deterministic_across_threads) {
    json j{{"experiment", "pnl-sweep"},
           {"seed", 3},
           {"trials", 2500},
           {"params", {{"depths", {2, 35}}, {"p_local", 1e-3}, {"p_remote", 1e-2}}}};
    ExperimentConfig one = resolved(j);
    one.threads = 1;
    ExperimentConfig four = one;
    four.threads = 4;
    ExperimentResult a = run_experiment(one);
    ExperimentResult b = run_experiment(four);
    EXPECT_EQ(a.csv(), b.csv());
    EXPECT_EQ(a.rows.size(), 4u);

    std::size_t scheme = column(a, "scheme"), depth = column(a, "depth"), remote = column(a, "remote_gates");
    for (const auto &row : a.rows) {
        if (row[scheme] == "DQEC") {
            // Remote gates only inside extraction, 7 blocks x 6 generators x >= 3.
            EXPECT_GE(std::stoi(row[remote]), 126);
        } else {
            EXPECT_GE(std::stoi(row[remote]), 7 * std::stoi(row[depth]));
        }
    }

    ExperimentConfig other = one;
    other.seed = 4;
    EXPECT_NE(run_experiment(other).csv(), a.csv());
}

TEST(pnl, zero_noise_succeeds) {
    ExperimentConfig c = resolved({{"experiment", "pnl-sweep"},
                                   {"trials", 200},
                                   {"params", {{"depths", {3, 10}}, {"p_local", 0.0}, {"p_remote", 0.0}}}});
    ExperimentResult r = run_experiment(c);
    std::size_t s = column(r, "success"), ci = column(r, "success_ci");
    for (const auto &row : r.rows) {
        EXPECT_EQ(row[s], "1");
        EXPECT_EQ(row[ci], "0");
    }
}

TEST(correlated, reduction_and_degenerate_spread) {
    ExperimentConfig c = resolved({{"experiment", "correlated-errors"},
                                   {"trials", 4000},
                                   {"threads", 2},
                                   {"params", {{"mean_rates", {0.01, 0.03}}}}});
    ExperimentResult r = run_experiment(c);
    EXPECT_TRUE(r.passed);
    EXPECT_GT(r.summary["min_relative_reduction"].get<double>(), 0.05);

    c.correlated.std_ratio = 0;
    ExperimentResult flat = run_experiment(c);
    std::size_t red = column(flat, "relative_reduction");
    for (const auto &row : flat.rows) {
        EXPECT_NEAR(std::stod(row[red]), 0, 1e-12);
    }

    c.correlated.std_ratio = 0.5;
    c.correlated.estimator = "sampled";
    ExperimentResult sampled = run_experiment(c);
    std::size_t le = column(sampled, "local_error"), de = column(sampled, "distributed_error");
    std::size_t lci = column(sampled, "local_ci");
    for (std::size_t i = 0; i < r.rows.size(); i++) {
        // Same rate draws, so the sampled estimate tracks the exact one.
        EXPECT_NEAR(std::stod(sampled.rows[i][le]), std::stod(r.rows[i][le]), 3 * std::stod(sampled.rows[i][lci]));
        EXPECT_GT(std::stod(sampled.rows[i][de]), 0);
    }
}

TEST(bound, small_run) {
    ExperimentConfig c = resolved({{"experiment", "bound-validate"},
                                   {"trials", 500},
                                   {"params", {{"n_list", {3, 20}}, {"mean_rates", {0.005, 0.05}}, {"lemma_cases", 500}}}});
    ExperimentResult r = run_experiment(c);
    EXPECT_EQ(r.rows.size(), 4u);
    EXPECT_TRUE(r.summary["checks"]["bound_holds_999"].get<bool>());
    EXPECT_EQ(r.summary["lemma1_violations"].get<int>(), 0);
    EXPECT_EQ(r.summary["lemma2_violations"].get<int>(), 0);
    EXPECT_NEAR(r.summary["spot_profile"]["difference"].get<double>(), 9.8e-5, 1e-12);
    ExperimentConfig c2 = c;
    c2.threads = 3;
    EXPECT_EQ(run_experiment(c2).csv(), r.csv());
}

TEST(verify_modes, wstate_allocation_apples) {
    ExperimentResult w = run_experiment(resolved(
        {{"experiment", "wstate-verify"}, {"params", {{"max_block", 5}, {"random_unitaries", 5}, {"random_states", 3}}}}));
    EXPECT_TRUE(w.passed) << w.summary.dump();
    EXPECT_GT(w.rows.size(), 10u);

    ExperimentResult a = run_experiment(resolved({{"experiment", "allocation-report"}}));
    EXPECT_TRUE(a.passed) << a.summary.dump();
    EXPECT_EQ(a.summary["ell7_np3"]["nonlocal"].get<int>(), 3);

    ExperimentResult p = run_experiment(resolved({{"experiment", "apples"}}));
    EXPECT_TRUE(p.passed) << p.summary.dump();
    EXPECT_NEAR(p.summary["cutoff_exact"].get<double>(), 0.073, 0.005);
    EXPECT_TRUE(p.summary["checks"].contains("cutoff_near_0073"));

    ExperimentResult q = run_experiment(resolved({{"experiment", "apples"}, {"params", {{"bins", {0.3, 0.1}}}}}));
    EXPECT_TRUE(q.passed);
    EXPECT_FALSE(q.summary["checks"].contains("cutoff_near_0073"));

    EXPECT_TRUE(is_verify_mode("wstate-verify"));
    EXPECT_FALSE(is_verify_mode("apples"));
}

TEST(result, csv_layout) {
    ExperimentResult r;
    r.columns = {"a", "b"};
    r.rows = {{"1", "2"}, {"3", "4"}};
    EXPECT_EQ(r.csv(), "a,b\n1,2\n3,4\n");
}
