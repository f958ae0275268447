// SPDX-License-Identifier: Apache-2.0

#include "daqec/bounds.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace daqec {

void ProcessorErrorProfile::validate() const {
    if (eps.empty()) {
        throw std::invalid_argument("error profile needs at least one processor");
    }
    for (double e : eps) {
        if (!(e >= 0 && e <= 1)) {
            throw std::invalid_argument("processor error rate outside [0, 1]");
        }
    }
}

double ProcessorErrorProfile::mean() const {
    return std::accumulate(eps.begin(), eps.end(), 0.0) / static_cast<double>(eps.size());
}

double ProcessorErrorProfile::variance() const {
    double m = mean();
    double acc = 0;
    for (double e : eps) {
        acc += (e - m) * (e - m);
    }
    return acc / static_cast<double>(eps.size());
}

ProcessorErrorProfile sample_profile(int n, double mean, double sd, Rng &rng, double upper) {
    if (n < 1 || !(upper > 0 && upper <= 1) || mean < 0 || mean > upper || sd < 0) {
        throw std::invalid_argument("invalid profile sampling parameters");
    }
    ProcessorErrorProfile p;
    p.eps.resize(n);
    for (auto &e : p.eps) {
        do {
            e = mean + sd * standard_normal(rng);
        } while (e < 0 || e > upper);
    }
    return p;
}

double success_local(const ProcessorErrorProfile &profile) {
    profile.validate();
    double s = 1;
    for (double e : profile.eps) {
        s *= 1 - e;
    }
    return s;
}

double success_dist(const ProcessorErrorProfile &profile) {
    profile.validate();
    return std::pow(1 - profile.mean(), static_cast<double>(profile.n()));
}

AdvantageReport advantage_report(const ProcessorErrorProfile &profile) {
    AdvantageReport r;
    double n = static_cast<double>(profile.n());
    r.eps_local = 1 - success_local(profile);
    r.eps_dist = 1 - success_dist(profile);
    r.difference = r.eps_local - r.eps_dist;
    r.variance = profile.variance();
    r.bound_approx = n * r.variance / 2;
    r.bound_exact = (1 - r.eps_local) * r.bound_approx;
    r.bound_holds = r.difference >= r.bound_exact;
    return r;
}

RootGap nth_root_gap(double a, double b, int n) {
    if (!(b > 0) || a < b || n < 1) {
        throw std::invalid_argument("nth_root_gap needs a >= b > 0 and n >= 1");
    }
    double nd = static_cast<double>(n);
    RootGap g;
    g.lhs = a - b;
    g.rhs = nd * std::pow(b, (nd - 1) / nd) * (std::pow(a, 1 / nd) - std::pow(b, 1 / nd));
    return g;
}

namespace {

void check_probs(std::span<const double> p, bool allow_one) {
    for (double x : p) {
        if (!(x >= 0 && (allow_one ? x <= 1 : x < 1))) {
            throw std::invalid_argument("apple probability outside the allowed range");
        }
    }
}

double ruin_by_enumeration(std::span<const double> p) {
    std::size_t n = p.size();
    double ruin = 0;
    for (uint64_t mask = 0; mask < (uint64_t{1} << n); mask++) {
        if (std::popcount(mask) < 2) {
            continue;
        }
        double pr = 1;
        for (std::size_t i = 0; i < n; i++) {
            pr *= (mask >> i) & 1 ? p[i] : 1 - p[i];
        }
        ruin += pr;
    }
    return ruin;
}

double binom2(std::size_t n) {
    return static_cast<double>(n) * static_cast<double>(n - 1) / 2;
}

}  // namespace

double barrel_ruin_two_or_more(std::span<const double> p) {
    check_probs(p, true);
    for (double x : p) {
        if (x == 1) {
            return ruin_by_enumeration(p);
        }
    }
    double survive_all = 1;
    for (double x : p) {
        survive_all *= 1 - x;
    }
    return 1 - survive_all * (1 + barrel_odds(p));
}

double barrel_ruin_linear(std::span<const double> p) {
    check_probs(p, true);
    if (p.empty()) {
        return 0;
    }
    return std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
}

double barrel_odds(std::span<const double> p) {
    check_probs(p, false);
    double f = 0;
    for (double x : p) {
        f += x / (1 - x);
    }
    return f;
}

PackingResult optimal_packing_bruteforce(std::span<const double> bin_probs) {
    int n = static_cast<int>(bin_probs.size());
    if (n < 2 || n > 4) {
        throw std::invalid_argument("packing search supports 2 to 4 bins");
    }
    check_probs(bin_probs, false);
    // A barrel is described by how many apples it takes from each bin.
    std::vector<std::vector<int>> comps;
    std::vector<int> cur(n, 0);
    std::function<void(int, int)> gen = [&](int i, int left) {
        if (i == n - 1) {
            cur[i] = left;
            comps.push_back(cur);
            return;
        }
        for (int c = 0; c <= left; c++) {
            cur[i] = c;
            gen(i + 1, left - c);
        }
    };
    gen(0, n);
    auto apples = [&](const std::vector<int> &comp) {
        std::vector<double> ps;
        for (int i = 0; i < n; i++) {
            ps.insert(ps.end(), comp[i], bin_probs[i]);
        }
        return ps;
    };
    std::vector<double> survive(comps.size());
    for (std::size_t c = 0; c < comps.size(); c++) {
        survive[c] = 1 - barrel_ruin_two_or_more(apples(comps[c]));
    }

    PackingResult best;
    best.success = -1;
    std::vector<int> remaining(n, n);
    std::vector<std::size_t> chosen;
    std::function<void(std::size_t, double)> search = [&](std::size_t min_c, double acc) {
        if (static_cast<int>(chosen.size()) == n) {
            best.packings++;
            if (acc > best.success) {
                best.success = acc;
                best.barrels.clear();
                best.odds.clear();
                for (std::size_t c : chosen) {
                    std::vector<int> barrel;
                    for (int i = 0; i < n; i++) {
                        barrel.insert(barrel.end(), comps[c][i], i);
                    }
                    best.barrels.push_back(barrel);
                    best.odds.push_back(barrel_odds(apples(comps[c])));
                }
            }
            return;
        }
        for (std::size_t c = min_c; c < comps.size(); c++) {
            bool fits = true;
            for (int i = 0; i < n; i++) {
                fits = fits && comps[c][i] <= remaining[i];
            }
            if (!fits) {
                continue;
            }
            for (int i = 0; i < n; i++) {
                remaining[i] -= comps[c][i];
            }
            chosen.push_back(c);
            search(c, acc * survive[c]);
            chosen.pop_back();
            for (int i = 0; i < n; i++) {
                remaining[i] += comps[c][i];
            }
        }
    };
    search(0, 1.0);

    std::vector<double> mixed(bin_probs.begin(), bin_probs.end());
    best.one_per_bin_success = std::pow(1 - barrel_ruin_two_or_more(mixed), n);
    best.one_per_bin_optimal = best.one_per_bin_success >= best.success * (1 - 1e-12);
    return best;
}

double heterogeneous_success_exact(std::span<const double> p, double p_c) {
    check_probs(p, false);
    double n = static_cast<double>(p.size());
    double barrel = (1 - barrel_ruin_two_or_more(p)) * std::pow(1 - p_c, binom2(p.size()));
    return std::pow(barrel, n);
}

double homogeneous_success_exact(std::span<const double> p) {
    check_probs(p, false);
    double n = static_cast<double>(p.size());
    double total = 1;
    for (double x : p) {
        total *= std::pow(1 - x, n) + n * x * std::pow(1 - x, n - 1);
    }
    return total;
}

double heterogeneous_success_linear(std::span<const double> p, double p_c) {
    check_probs(p, false);
    double n = static_cast<double>(p.size());
    double barrel = std::pow(1 - p_c, n - 1) * (1 - barrel_ruin_linear(p));
    return std::pow(barrel, n);
}

double homogeneous_success_linear(std::span<const double> p) {
    check_probs(p, false);
    double total = 1;
    for (double x : p) {
        total *= 1 - x;
    }
    return total;
}

double contamination_cutoff_exact(std::span<const double> p) {
    if (p.size() < 2) {
        throw std::invalid_argument("cutoff needs at least two bins");
    }
    check_probs(p, false);
    double n = static_cast<double>(p.size());
    double het = 1 - barrel_ruin_two_or_more(p);
    if (!(het > 0)) {
        throw std::invalid_argument("degenerate bins: mixed barrels never survive");
    }
    double ratio = std::pow(homogeneous_success_exact(p), 1 / n) / het;
    return 1 - std::pow(ratio, 1 / binom2(p.size()));
}

double contamination_cutoff_approx(std::span<const double> p) {
    if (p.size() < 2) {
        throw std::invalid_argument("cutoff needs at least two bins");
    }
    check_probs(p, false);
    double n = static_cast<double>(p.size());
    double sum = 0;
    for (double x : p) {
        sum += 1 - x;
    }
    double ratio = n * std::pow(homogeneous_success_linear(p), 1 / n) / sum;
    return 1 - std::pow(ratio, 1 / (n - 1));
}

}  // namespace daqec
