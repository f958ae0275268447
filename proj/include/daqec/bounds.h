// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "daqec/rng.h"

namespace daqec {

/// Per-processor error probabilities of an n x n machine.
struct ProcessorErrorProfile {
    std::vector<double> eps;

    void validate() const;
    std::size_t n() const { return eps.size(); }
    double mean() const;
    /// Population variance (divide by n).
    double variance() const;
};

/// eps_p ~ Normal(mean, sd), redrawn until it lands in [0, upper].
ProcessorErrorProfile sample_profile(int n, double mean, double sd, Rng &rng, double upper = 0.5);

/// prod_p (1 - eps_p): each block sits on one processor.
double success_local(const ProcessorErrorProfile &profile);
/// (mean_p (1 - eps_p))^n: each block spans all processors.
double success_dist(const ProcessorErrorProfile &profile);

struct AdvantageReport {
    double eps_local = 0;
    double eps_dist = 0;
    double difference = 0;    // eps_local - eps_dist
    double variance = 0;
    double bound_exact = 0;   // n (1 - eps_local) sigma^2 / 2
    double bound_approx = 0;  // n sigma^2 / 2
    bool bound_holds = false; // difference >= bound_exact
};

AdvantageReport advantage_report(const ProcessorErrorProfile &profile);

struct RootGap {
    double lhs = 0;  // a - b
    double rhs = 0;  // n b^{(n-1)/n} (a^{1/n} - b^{1/n})
};

/// Both sides of a - b >= n b^{(n-1)/n} (a^{1/n} - b^{1/n}) for a >= b > 0.
RootGap nth_root_gap(double a, double b, int n);

// ---------------------------------------------------------------------------
// Barrels: bins are processors, barrels are code blocks, expired apples are
// qubit errors.

/// Probability that two or more of the barrel's apples expire:
/// 1 - prod(1 - p_i) (1 + sum p_i / (1 - p_i)). Falls back to direct
/// enumeration when some p_i == 1.
double barrel_ruin_two_or_more(std::span<const double> p);

/// Ruin probability when k expired apples ruin the barrel with probability
/// k/n: the mean of p.
double barrel_ruin_linear(std::span<const double> p);

/// sum p / (1 - p) over one barrel's apples.
double barrel_odds(std::span<const double> p);

struct PackingResult {
    /// Bin index of every apple, one row per barrel.
    std::vector<std::vector<int>> barrels;
    double success = 0;
    std::vector<double> odds;  // per-barrel sum p/(1-p) of the best packing
    double one_per_bin_success = 0;
    bool one_per_bin_optimal = false;
    std::size_t packings = 0;  // distinct packings evaluated
};

/// Exhaustive search over every way of packing n bins of n apples (bin i's
/// apples expire with probability bin_probs[i]) into n barrels of n apples,
/// maximizing the product of barrel survival probabilities under the
/// two-or-more rule. n <= 4.
PackingResult optimal_packing_bruteforce(std::span<const double> bin_probs);

/// Total success of n barrels packed one apple per bin, each losing every
/// one of its C(n,2) internal links with probability p_c.
double heterogeneous_success_exact(std::span<const double> p, double p_c);
/// Total success of n single-bin barrels under the two-or-more rule.
double homogeneous_success_exact(std::span<const double> p);
/// Same pair under the linear ruin rule, with n-1 contaminated links.
double heterogeneous_success_linear(std::span<const double> p, double p_c);
double homogeneous_success_linear(std::span<const double> p);

/// p_c where the two totals of the exact rule coincide:
/// 1 - ((prod_i hom_i)^{1/n} / S_het)^{1/C(n,2)}.
double contamination_cutoff_exact(std::span<const double> p);
/// 1 - (n (prod (1-p_i))^{1/n} / sum (1-p_i))^{1/(n-1)}.
double contamination_cutoff_approx(std::span<const double> p);

}  // namespace daqec
