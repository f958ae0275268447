// SPDX-License-Identifier: Apache-2.0

#include "daqec/allocation.h"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace daqec {

Rational::Rational(int64_t num, int64_t den) {
    if (den == 0) {
        throw std::domain_error("zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
}

std::string Rational::str() const {
    if (den_ == 1) {
        return std::to_string(num_);
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
}

int64_t Rational::ceil() const {
    int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ > 0) {
        q++;
    }
    return q;
}

Rational operator+(Rational a, Rational b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator-(Rational a, Rational b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator*(Rational a, Rational b) {
    return Rational(a.num_ * b.num_, a.den_ * b.den_);
}

Rational operator/(Rational a, Rational b) {
    if (b.num_ == 0) {
        throw std::domain_error("division by zero");
    }
    return Rational(a.num_ * b.den_, a.den_ * b.num_);
}

bool operator<(Rational a, Rational b) {
    return a.num_ * b.den_ < b.num_ * a.den_;
}

void AllocationParams::validate() const {
    if (ell_c < 1 || n_L < 1 || n_p < 1) {
        throw std::invalid_argument("allocation parameters must be positive");
    }
}

Allocation::Allocation(int n_blocks, int ell_c, int n_p, int capacity)
    : n_blocks_(n_blocks), ell_c_(ell_c), n_p_(n_p), capacity_(capacity), assign_(n_blocks * ell_c, -1) {
    if (n_blocks < 1 || ell_c < 1 || n_p < 1 || capacity < 1) {
        throw std::invalid_argument("allocation dimensions must be positive");
    }
}

void Allocation::set(int block, int index, int proc) {
    if (proc < 0 || proc >= n_p_) {
        throw std::out_of_range("processor " + std::to_string(proc) + " out of range");
    }
    assign_.at(block * ell_c_ + index) = proc;
}

bool Allocation::complete() const {
    for (int p : assign_) {
        if (p < 0) {
            return false;
        }
    }
    return true;
}

int Allocation::load(int proc) const {
    int n = 0;
    for (int p : assign_) {
        n += p == proc;
    }
    return n;
}

void Allocation::validate() const {
    if (!complete()) {
        throw std::logic_error("allocation leaves a qubit unassigned");
    }
    for (int p = 0; p < n_p_; p++) {
        if (load(p) > capacity_) {
            throw std::logic_error("processor " + std::to_string(p) + " holds " + std::to_string(load(p)) +
                                   " qubits, capacity " + std::to_string(capacity_));
        }
    }
}

std::string Allocation::serialize() const {
    std::string out;
    for (int b = 0; b < n_blocks_; b++) {
        for (int j = 0; j < ell_c_; j++) {
            out += std::to_string(b) + "," + std::to_string(j) + "," + std::to_string(processor(b, j)) + "\n";
        }
    }
    return out;
}

namespace {

/// Places `slices` (each holding one qubit of every block in `blocks`) on
/// `procs`, where |procs| = |blocks| and each processor has room for
/// |slices| of these qubits.
void place(Allocation &alloc, const std::vector<int> &slices, const std::vector<int> &blocks,
           const std::vector<int> &procs) {
    int n_p = static_cast<int>(procs.size());
    int len = static_cast<int>(slices.size());
    int q = len / n_p;
    int s = len % n_p;
    for (int i = 0; i < n_p; i++) {
        for (int w = 0; w < q; w++) {
            for (int b : blocks) {
                alloc.set(b, slices[i * q + w], procs[i]);
            }
        }
    }
    if (s == 0) {
        return;
    }
    int k = n_p / s;
    int t = n_p - k * s;
    std::vector<int> rem(slices.begin() + q * n_p, slices.end());
    for (int r = 0; r < s; r++) {
        for (int g = 0; g < k; g++) {
            for (int m = 0; m < s; m++) {
                alloc.set(blocks[g * s + m], rem[r], procs[r * k + g]);
            }
        }
    }
    if (t > 0) {
        std::vector<int> sub_blocks(blocks.begin() + k * s, blocks.end());
        std::vector<int> sub_procs(procs.begin() + k * s, procs.end());
        place(alloc, rem, sub_blocks, sub_procs);
    }
}

}  // namespace

Allocation even_partition_allocation(const AllocationParams &params) {
    params.validate();
    if (params.n_L != params.n_p) {
        throw std::invalid_argument("even partition allocation is defined for n_L = n_p");
    }
    Allocation alloc(params.n_L, params.ell_c, params.n_p, params.ell_c);
    std::vector<int> slices(params.ell_c);
    std::iota(slices.begin(), slices.end(), 0);
    std::vector<int> ids(params.n_p);
    std::iota(ids.begin(), ids.end(), 0);
    place(alloc, slices, ids, ids);
    alloc.validate();
    return alloc;
}

NonlocalityReport eta_count(const Allocation &alloc) {
    if (!alloc.complete()) {
        throw std::invalid_argument("eta_count needs a complete allocation");
    }
    int n = alloc.n_blocks();
    NonlocalityReport r;
    r.total_pairwise_gates = static_cast<int64_t>(alloc.ell_c()) * n * (n - 1) / 2;
    for (int a = 0; a < n; a++) {
        for (int b = a + 1; b < n; b++) {
            r.nonlocal_gates += transversal_remote_count(alloc, a, b);
        }
    }
    r.eta = r.total_pairwise_gates == 0 ? Rational(0) : Rational(r.nonlocal_gates, r.total_pairwise_gates);
    return r;
}

int transversal_remote_count(const Allocation &alloc, int block_a, int block_b) {
    int count = 0;
    for (int j = 0; j < alloc.ell_c(); j++) {
        count += alloc.processor(block_a, j) != alloc.processor(block_b, j);
    }
    return count;
}

EtaFormula eta_formula(const AllocationParams &params) {
    params.validate();
    EtaFormula f;
    int s = params.s();
    if (s == 0) {
        f.trivial = true;
        f.valid = true;
        return f;
    }
    int64_t n_p = params.n_p;
    int64_t k = params.k();
    int64_t t = params.t();
    f.valid = t == 0 || s % t == 0;
    int64_t den = static_cast<int64_t>(params.ell_c) * params.n_L * (params.n_L - 1);
    if (den == 0) {
        throw std::invalid_argument("eta is undefined for a single logical qubit");
    }
    f.eta = Rational(s * (n_p * n_p - k * s * s - t * t), den);
    return f;
}

Rational eta_bound(const AllocationParams &params) {
    params.validate();
    int64_t den = static_cast<int64_t>(params.ell_c) * params.n_L * (params.n_L - 1);
    if (den == 0) {
        throw std::invalid_argument("eta is undefined for a single logical qubit");
    }
    return Rational(static_cast<int64_t>(params.s()) * params.n_p * (params.n_p - 1), den);
}

int64_t advantage_threshold_basic(int n_p, int64_t d_enc_dec, Rational eta) {
    if (!(eta < Rational(1))) {
        throw std::invalid_argument("no advantage threshold exists for eta >= 1");
    }
    return (Rational(n_p * d_enc_dec) / (Rational(1) - eta)).ceil();
}

ThresholdResult advantage_threshold_general(const AllocationParams &params, int64_t d_enc_dec) {
    params.validate();
    EtaFormula f = eta_formula(params);
    ThresholdResult r;
    r.eta = f.eta;
    r.in_verified_regime = params.n_p < 5 && f.valid;
    if (!(f.eta < Rational(1))) {
        throw std::invalid_argument("no advantage threshold exists for eta >= 1");
    }
    int64_t q = params.q();
    Rational inner = params.ell_c < 2 ? Rational(0)
                                      : Rational(params.n_p * q * (q - 1),
                                                 static_cast<int64_t>(params.ell_c) * (params.ell_c - 1));
    Rational rhs = Rational(d_enc_dec * params.n_p) * (Rational(1) - inner);
    r.d_circuit = (rhs / (Rational(1) - f.eta)).ceil();
    if (r.d_circuit < 0) {
        r.d_circuit = 0;
    }
    return r;
}

BruteForceResult brute_force_optimal(int ell_c, int n_p) {
    if (ell_c < 1 || n_p < 1) {
        throw std::invalid_argument("brute force needs positive sizes");
    }
    if (ell_c > 9 || n_p > 3) {
        throw std::invalid_argument("instance too large for exhaustive search (ell_c <= 9, n_p <= 3)");
    }
    int n_blocks = n_p;
    // Every way to split one slice's n_blocks qubits over the processors.
    std::vector<std::vector<int>> comps;
    std::vector<int> cur(n_p, 0);
    std::function<void(int, int)> gen = [&](int p, int left) {
        if (p == n_p - 1) {
            cur[p] = left;
            comps.push_back(cur);
            return;
        }
        for (int c = 0; c <= left; c++) {
            cur[p] = c;
            gen(p + 1, left - c);
        }
    };
    gen(0, n_blocks);
    std::vector<int64_t> cost(comps.size());
    for (std::size_t i = 0; i < comps.size(); i++) {
        int64_t local = 0;
        for (int c : comps[i]) {
            local += static_cast<int64_t>(c) * (c - 1) / 2;
        }
        cost[i] = static_cast<int64_t>(n_blocks) * (n_blocks - 1) / 2 - local;
    }

    int64_t best = INT64_MAX;
    std::vector<std::size_t> best_choice;
    std::vector<std::size_t> choice;
    std::vector<int> load(n_p, 0);
    uint64_t visited = 0;
    std::function<void(std::size_t, int64_t)> search = [&](std::size_t min_comp, int64_t acc) {
        if (acc >= best) {
            return;
        }
        if (static_cast<int>(choice.size()) == ell_c) {
            visited++;
            best = acc;
            best_choice = choice;
            return;
        }
        for (std::size_t i = min_comp; i < comps.size(); i++) {
            bool fits = true;
            for (int p = 0; p < n_p; p++) {
                if (load[p] + comps[i][p] > ell_c) {
                    fits = false;
                    break;
                }
            }
            if (!fits) {
                continue;
            }
            for (int p = 0; p < n_p; p++) {
                load[p] += comps[i][p];
            }
            choice.push_back(i);
            search(i, acc + cost[i]);
            choice.pop_back();
            for (int p = 0; p < n_p; p++) {
                load[p] -= comps[i][p];
            }
        }
        visited++;
    };
    search(0, 0);

    Allocation witness(n_blocks, ell_c, n_p, ell_c);
    for (int j = 0; j < ell_c; j++) {
        const auto &c = comps[best_choice[j]];
        int b = 0;
        for (int p = 0; p < n_p; p++) {
            for (int m = 0; m < c[p]; m++) {
                witness.set(b++, j, p);
            }
        }
    }
    witness.validate();
    return BruteForceResult{best, witness, visited};
}

}  // namespace daqec
