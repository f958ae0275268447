// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace daqec {

/// Exact fraction with a positive denominator, always in lowest terms.
class Rational {
   public:
    Rational(int64_t num = 0, int64_t den = 1);

    int64_t num() const { return num_; }
    int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const;

    /// Smallest integer >= this value.
    int64_t ceil() const;

    friend Rational operator+(Rational a, Rational b);
    friend Rational operator-(Rational a, Rational b);
    friend Rational operator*(Rational a, Rational b);
    friend Rational operator/(Rational a, Rational b);
    friend bool operator==(Rational a, Rational b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend bool operator<(Rational a, Rational b);
    friend bool operator<=(Rational a, Rational b) { return !(b < a); }

   private:
    int64_t num_;
    int64_t den_;
};

struct AllocationParams {
    int ell_c = 0;  // code length
    int n_L = 0;    // logical qubits (code blocks)
    int n_p = 0;    // processors

    int q() const { return ell_c / n_p; }
    int s() const { return ell_c % n_p; }
    /// floor(n_p / s); 0 when s == 0.
    int k() const { return s() == 0 ? 0 : n_p / s(); }
    /// n_p - k s, the size of the leftover group of a split slice.
    int t() const { return s() == 0 ? 0 : n_p - k() * s(); }
    /// n_p mod k, the alternative reading of the leftover size. Reported
    /// alongside t() so the two can be compared.
    int t_alt() const { return k() == 0 ? 0 : n_p % k(); }

    void validate() const;
};

/// Processor assignment of every (block, transversal index) qubit.
class Allocation {
   public:
    Allocation(int n_blocks, int ell_c, int n_p, int capacity);

    int n_blocks() const { return n_blocks_; }
    int ell_c() const { return ell_c_; }
    int n_p() const { return n_p_; }
    int capacity() const { return capacity_; }

    int processor(int block, int index) const { return assign_.at(block * ell_c_ + index); }
    void set(int block, int index, int proc);
    bool complete() const;
    int load(int proc) const;

    /// Throws if a qubit is unassigned or a processor is over capacity.
    void validate() const;

    /// `block,index,processor` per line, ascending by (block, index).
    std::string serialize() const;

   private:
    int n_blocks_;
    int ell_c_;
    int n_p_;
    int capacity_;
    std::vector<int> assign_;
};

struct NonlocalityReport {
    int64_t total_pairwise_gates = 0;
    int64_t nonlocal_gates = 0;
    Rational eta;
};

/// Whole slices first, then each remainder slice split into k groups of s
/// plus one group of t, with the t-groups placed recursively on the last t
/// processors. Requires n_L = n_p.
Allocation even_partition_allocation(const AllocationParams &params);

/// Direct count over every block pair and transversal index.
NonlocalityReport eta_count(const Allocation &alloc);

/// Number of transversal indices j where blocks a and b sit on different
/// processors, i.e. remote physical gates of one transversal two-block gate.
int transversal_remote_count(const Allocation &alloc, int block_a, int block_b);

struct EtaFormula {
    Rational eta;
    bool valid = false;    // t == 0 or s mod t == 0
    bool trivial = false;  // s == 0
};

/// eta = s (n_p^2 - k s^2 - t^2) / (ell_c n_L (n_L - 1)).
EtaFormula eta_formula(const AllocationParams &params);

/// s n_p (n_p - 1) / (ell_c n_L (n_L - 1)).
Rational eta_bound(const AllocationParams &params);

/// Smallest integer d_circuit with d_circuit (1 - eta) >= n_p d_enc_dec.
int64_t advantage_threshold_basic(int n_p, int64_t d_enc_dec, Rational eta);

struct ThresholdResult {
    int64_t d_circuit = 0;
    Rational eta;
    /// n_p < 5 and the closed-form eta is valid.
    bool in_verified_regime = false;
};

/// Smallest integer d_circuit with
/// d_circuit (1 - eta) >= d_enc_dec n_p (1 - n_p q (q-1) / (ell_c (ell_c - 1))).
ThresholdResult advantage_threshold_general(const AllocationParams &params, int64_t d_enc_dec);

struct BruteForceResult {
    int64_t min_nonlocal = 0;
    Allocation witness;
    uint64_t search_nodes = 0;
};

/// Exhaustive minimum of eta_count over capacity-respecting allocations
/// with n_L = n_p. Slices are interchangeable and a slice's cost only depends
/// on how many of its qubits land on each processor, so the search runs over
/// multisets of per-slice processor-count vectors. Limited to ell_c <= 9 and
/// n_p <= 3.
BruteForceResult brute_force_optimal(int ell_c, int n_p);

}  // namespace daqec
