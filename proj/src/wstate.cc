// SPDX-License-Identifier: Apache-2.0

#include "daqec/wstate.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace daqec {

namespace {

bool is_power_of_two(int n) {
    return n >= 1 && std::has_single_bit(static_cast<unsigned>(n));
}

std::size_t sub_index(const RadixVector &radix, std::size_t i, std::span<const int> sites) {
    std::size_t r = 0;
    for (int s : sites) {
        r = r * radix.dim(s) + radix.digit(i, s);
    }
    return r;
}

std::vector<int> iota_sites(int first, int count) {
    std::vector<int> v(count);
    std::iota(v.begin(), v.end(), first);
    return v;
}

void require_qutrits(const MixedRadixState &state) {
    for (int d : state.radix().dims()) {
        if (d != 3) {
            throw std::invalid_argument("W-state code operations expect qutrit sites");
        }
    }
}

/// Reflection sending |0> to the uniform superposition of levels 1..max_level.
Operator excitation_map(int dim, int max_level) {
    Ket v = Ket::Zero(dim);
    v[0] = 1;
    for (int j = 1; j <= max_level; j++) {
        v[j] = -1.0 / std::sqrt(static_cast<double>(max_level));
    }
    return Operator::Identity(dim, dim) - (2.0 / v.squaredNorm()) * v * v.adjoint();
}

Ket w_vector_levels(int n, int dim, int max_level) {
    RadixVector radix(std::vector<int>(n, dim));
    Ket psi = Ket::Zero(radix.total_dim());
    double amp = 1.0 / std::sqrt(static_cast<double>(n) * max_level);
    for (int site = 0; site < n; site++) {
        for (int j = 1; j <= max_level; j++) {
            psi[j * radix.stride(site)] = amp;
        }
    }
    return psi;
}

std::vector<int> level_range(int lo, int hi) {
    std::vector<int> v;
    for (int j = lo; j <= hi; j++) {
        v.push_back(j);
    }
    return v;
}

double ancilla_residual(const MixedRadixState &state, int site) {
    std::array<int, 1> keep{site};
    Operator rho = partial_trace(state, keep).density_matrix();
    rho(0, 0) -= 1.0;
    return rho.cwiseAbs().maxCoeff();
}

MixedRadixState prepare_w2_levels(int dim, int max_level) {
    RadixVector radix({dim, dim, 2});
    MixedRadixState s = basis_state(radix, {0, 0, 0});
    Operator f = excitation_map(dim, max_level);
    s = apply_unitary(s, GateSpec(gates::hadamard(), {2}, "H"), {2});
    s = apply_unitary(s, GateSpec(gates::controlled_on_level(2, 1, f), {2, dim}, "C1-F"), {2, 0});
    s = apply_unitary(s, GateSpec(gates::controlled_on_level(2, 0, f), {2, dim}, "C0-F"), {2, 1});
    auto levels = level_range(1, max_level);
    s = apply_unitary(s, GateSpec(gates::controlled_on_levels(dim, levels, gates::pauli_x()), {dim, 2}, "CX"),
                      {0, 2});
    return discard_site(s, 2, 0);
}

WPrepResult scale_levels(const MixedRadixState &w, int max_level) {
    int n = static_cast<int>(w.num_sites());
    int dim = w.radix().dim(0);
    MixedRadixState expected = MixedRadixState::trusted_pure(w.radix(), w_vector_levels(n, dim, max_level));
    if (fidelity(w, expected) < 1 - 1e-8) {
        throw std::invalid_argument("scale_w input is not a W state");
    }
    std::vector<int> dims(2 * n, dim);
    dims.push_back(2);
    RadixVector tail_radix(std::vector<int>(dims.begin() + n, dims.end()));
    std::vector<int> zeros(n + 1, 0);
    MixedRadixState s = tensor(w, basis_state(tail_radix, zeros));
    int anc = 2 * n;
    s = apply_unitary(s, GateSpec(gates::hadamard(), {2}, "H"), {anc});
    GateSpec cswap(gates::cswap(dim), {2, dim, dim}, "CSWAP");
    for (int i = 0; i < n; i++) {
        s = apply_unitary(s, cswap, {anc, i, n + i});
    }
    for (int i = 0; i < n; i++) {
        for (int j = 1; j <= max_level; j++) {
            s = apply_unitary(s, GateSpec(gates::controlled_on_level(dim, j, gates::pauli_x()), {dim, 2}, "CX"),
                              {n + i, anc});
        }
    }
    WPrepResult out;
    out.max_ancilla_residual = ancilla_residual(s, anc);
    out.state = discard_site(s, anc, 0);
    out.ancillas_used = 1;
    return out;
}

WPrepResult prepare_w_levels(int n, int dim, int max_level) {
    if (!is_power_of_two(n) || n < 2) {
        throw std::invalid_argument("W preparation by doubling needs n a power of two, got " + std::to_string(n));
    }
    WPrepResult out;
    out.state = prepare_w2_levels(dim, max_level);
    while (static_cast<int>(out.state.num_sites()) < n) {
        WPrepResult next = scale_levels(out.state, max_level);
        out.state = std::move(next.state);
        out.max_ancilla_residual = std::max(out.max_ancilla_residual, next.max_ancilla_residual);
        out.ancillas_used += next.ancillas_used;
    }
    return out;
}

/// Three-site W state on the {0,1} levels of qutrits.
MixedRadixState prepare_w3_qutrit() {
    RadixVector radix({3, 3, 3});
    MixedRadixState s = basis_state(radix, {0, 0, 0});
    double phi = 2 * std::acos(1 / std::sqrt(3.0));
    Operator x = gates::embed(gates::pauli_x(), 3);
    GateSpec cnot(gates::controlled_on_level(3, 1, x), {3, 3}, "CNOT");
    s = apply_unitary(s, GateSpec(gates::embed(gates::ry(phi), 3), {3}, "RY"), {0});
    s = apply_unitary(s, GateSpec(x, {3}, "X"), {0});
    s = apply_unitary(s, GateSpec(gates::controlled_on_level(3, 0, gates::embed(gates::hadamard(), 3)), {3, 3}, "C0-H"),
                      {0, 1});
    s = apply_unitary(s, GateSpec(x, {3}, "X"), {2});
    s = apply_unitary(s, cnot, {0, 2});
    s = apply_unitary(s, cnot, {1, 2});
    return s;
}

MixedRadixState apply_to_all(MixedRadixState s, const GateSpec &g) {
    for (std::size_t i = 0; i < s.num_sites(); i++) {
        std::array<int, 1> site{static_cast<int>(i)};
        s = apply_unitary(s, g, site);
    }
    return s;
}

Ket qutrit_embed(const Ket &psi) {
    Ket v = Ket::Zero(3);
    v.head(2) = psi;
    return v;
}

/// Appends `m` qubit ancillas in |0> to a qudit ket.
Ket with_ancillas(const Ket &ket, int m) {
    std::size_t a = std::size_t{1} << m;
    Ket out = Ket::Zero(ket.size() * a);
    for (Eigen::Index q = 0; q < ket.size(); q++) {
        out[q * a] = ket[q];
    }
    return out;
}

/// Reduced density operator of an ensemble on `keep`, restricted to the
/// kept indices that carry weight. Avoids materializing the full operator.
struct SparseDensity {
    std::vector<std::size_t> support;
    Operator block;
};

SparseDensity sparse_reduce(const RadixVector &radix, std::span<const PureComponent> comps,
                            std::span<const int> keep) {
    std::vector<int> rest;
    for (std::size_t s = 0; s < radix.num_sites(); s++) {
        if (std::find(keep.begin(), keep.end(), static_cast<int>(s)) == keep.end()) {
            rest.push_back(static_cast<int>(s));
        }
    }
    std::map<std::size_t, std::size_t> pos;
    for (const auto &c : comps) {
        for (Eigen::Index i = 0; i < c.ket.size(); i++) {
            if (std::abs(c.ket[i]) > 1e-14) {
                pos.emplace(sub_index(radix, i, keep), 0);
            }
        }
    }
    SparseDensity out;
    for (auto &[k, p] : pos) {
        p = out.support.size();
        out.support.push_back(k);
    }
    out.block = Operator::Zero(out.support.size(), out.support.size());
    for (const auto &c : comps) {
        std::map<std::size_t, std::vector<std::pair<std::size_t, Complex>>> buckets;
        for (Eigen::Index i = 0; i < c.ket.size(); i++) {
            if (std::abs(c.ket[i]) > 1e-14) {
                buckets[sub_index(radix, i, rest)].emplace_back(pos[sub_index(radix, i, keep)], c.ket[i]);
            }
        }
        for (const auto &[r, entries] : buckets) {
            for (const auto &[p1, a1] : entries) {
                for (const auto &[p2, a2] : entries) {
                    out.block(p1, p2) += c.weight * a1 * std::conj(a2);
                }
            }
        }
    }
    return out;
}

Operator densify(const SparseDensity &s, std::size_t dim) {
    Operator rho = Operator::Zero(dim, dim);
    for (std::size_t a = 0; a < s.support.size(); a++) {
        for (std::size_t b = 0; b < s.support.size(); b++) {
            rho(s.support[a], s.support[b]) = s.block(a, b);
        }
    }
    return rho;
}

/// Pure when the block has rank one, so large registers stay representable.
MixedRadixState state_from_sparse(const RadixVector &radix, const SparseDensity &s) {
    Eigen::SelfAdjointEigenSolver<Operator> eig(s.block);
    std::vector<PureComponent> comps;
    for (Eigen::Index k = 0; k < eig.eigenvalues().size(); k++) {
        double w = eig.eigenvalues()[k];
        if (w < kNegligibleProbability) {
            continue;
        }
        Ket v = Ket::Zero(radix.total_dim());
        for (std::size_t a = 0; a < s.support.size(); a++) {
            v[s.support[a]] = eig.eigenvectors()(a, k);
        }
        comps.push_back(PureComponent{w, std::move(v)});
    }
    return from_ensemble(radix, comps);
}

/// Trace norm of (joint - rho_q (x) rho_a) for an ensemble over
/// (qudits..., ancillas...), evaluated on the product support.
double factorization_error(const RadixVector &radix, std::span<const PureComponent> comps, int n_qudits) {
    double total = 0;
    for (const auto &c : comps) {
        total += c.weight;
    }
    if (total < kNegligibleProbability) {
        return 0;
    }
    std::vector<PureComponent> normed(comps.begin(), comps.end());
    for (auto &c : normed) {
        c.weight /= total;
    }
    int n_sites = static_cast<int>(radix.num_sites());
    auto q_sites = iota_sites(0, n_qudits);
    auto a_sites = iota_sites(n_qudits, n_sites - n_qudits);
    auto all_sites = iota_sites(0, n_sites);
    SparseDensity rq = sparse_reduce(radix, normed, q_sites);
    SparseDensity ra = sparse_reduce(radix, normed, a_sites);
    SparseDensity joint = sparse_reduce(radix, normed, all_sites);
    std::size_t a_dim = radix.total_dim() / radix.select(q_sites).total_dim();
    std::size_t nq = rq.support.size();
    std::size_t na = ra.support.size();
    std::map<std::size_t, std::size_t> upos;
    for (std::size_t x = 0; x < nq; x++) {
        for (std::size_t y = 0; y < na; y++) {
            upos[rq.support[x] * a_dim + ra.support[y]] = x * na + y;
        }
    }
    Operator diff(nq * na, nq * na);
    for (std::size_t x = 0; x < nq; x++) {
        for (std::size_t y = 0; y < na; y++) {
            for (std::size_t x2 = 0; x2 < nq; x2++) {
                for (std::size_t y2 = 0; y2 < na; y2++) {
                    diff(x * na + y, x2 * na + y2) = -rq.block(x, x2) * ra.block(y, y2);
                }
            }
        }
    }
    for (std::size_t u = 0; u < joint.support.size(); u++) {
        for (std::size_t v = 0; v < joint.support.size(); v++) {
            diff(upos.at(joint.support[u]), upos.at(joint.support[v])) += joint.block(u, v);
        }
    }
    return trace_norm(diff);
}

GateSpec cx_on_level(int level) {
    return GateSpec(gates::controlled_on_level(3, level, gates::pauli_x()), {3, 2}, "C" + std::to_string(level) + "-X");
}

}  // namespace

// ---------------------------------------------------------------------------

void WCodeParams::validate() const {
    if (d != d_L + 1) {
        throw std::invalid_argument("physical dimension must equal d_L + 1");
    }
    if (bot_level != d_L) {
        throw std::invalid_argument("bot level must equal d_L");
    }
    if (n < 2) {
        throw std::invalid_argument("block size must be at least 2");
    }
    if (k < 1 || (k > 1 && (n % 2 != 0 || n < 2 * k))) {
        throw std::invalid_argument("multi-qubit encoding needs an even block of at least 2k sites");
    }
}

GateCounts &GateCounts::operator+=(const GateCounts &o) {
    controlled_nots += o.controlled_nots;
    cswaps += o.cswaps;
    swaps += o.swaps;
    single_site += o.single_site;
    other += o.other;
    return *this;
}

void validate_logical(const Ket &psi) {
    if (psi.size() != 2) {
        throw std::invalid_argument("logical input must have two amplitudes");
    }
    if (std::abs(psi.squaredNorm() - 1) > kConstructionTol) {
        throw std::invalid_argument("logical input is not normalized");
    }
}

Ket orthogonal_complement(const Ket &psi) {
    validate_logical(psi);
    Ket perp(2);
    perp << std::conj(psi[1]), -std::conj(psi[0]);
    return perp;
}

GateSpec gate_u02() {
    Operator m = Operator::Zero(3, 3);
    m(0, 2) = 1;
    m(2, 0) = 1;
    m(1, 1) = 1;
    return GateSpec(m, {3}, "U02");
}

namespace {
GateSpec encoding_gate(const Ket &psi, const char *name) {
    Ket perp = orthogonal_complement(psi);
    Operator m = Operator::Zero(3, 3);
    m.col(1).head(2) = psi;
    m.col(0).head(2) = perp;
    m(2, 2) = 1;
    return GateSpec(m, {3}, name);
}
}  // namespace

GateSpec gate_uenc(const Ket &psi) {
    return encoding_gate(psi, "Uenc");
}

GateSpec gate_venc(const Ket &phi) {
    return encoding_gate(phi, "Venc");
}

GateSpec gate_transversal_cnot() {
    Operator m = Operator::Identity(9, 9);
    // |1,0> <-> |1,1>; everything touching level 2 is untouched.
    m(3, 3) = 0;
    m(4, 4) = 0;
    m(3, 4) = 1;
    m(4, 3) = 1;
    return GateSpec(m, {3, 3}, "CNOT01");
}

std::vector<GateSpec> presence_pair_gates() {
    return {cx_on_level(0), cx_on_level(1)};
}

MixedRadixState apply_presence_pair(const MixedRadixState &state, int qudit_site, int ancilla_site,
                                    GateCounts *counts) {
    MixedRadixState s = state;
    for (const auto &g : presence_pair_gates()) {
        std::array<int, 2> sites{qudit_site, ancilla_site};
        s = apply_unitary(s, g, sites);
        if (counts != nullptr) {
            counts->controlled_nots++;
        }
    }
    return s;
}

// ---------------------------------------------------------------------------

Ket w_state_vector(int n, int d) {
    if (n < 1 || d < 2) {
        throw std::invalid_argument("W state needs n >= 1 and d >= 2");
    }
    return w_vector_levels(n, d, d - 1);
}

MixedRadixState prepare_w2(int d) {
    if (d < 2) {
        throw std::invalid_argument("W preparation needs d >= 2");
    }
    return prepare_w2_levels(d, d - 1);
}

WPrepResult scale_w(const MixedRadixState &w) {
    if (!w.is_pure() || w.num_sites() < 1) {
        throw std::invalid_argument("scale_w expects a pure W state");
    }
    int dim = w.radix().dim(0);
    for (int d : w.radix().dims()) {
        if (d != dim) {
            throw std::invalid_argument("scale_w expects uniform site dimension");
        }
    }
    return scale_levels(w, dim - 1);
}

WPrepResult prepare_w(int n, int d) {
    if (d < 2) {
        throw std::invalid_argument("W preparation needs d >= 2");
    }
    return prepare_w_levels(n, d, d - 1);
}

Ket codeword_vector(const Ket &psi, int n) {
    validate_logical(psi);
    if (n < 1) {
        throw std::invalid_argument("block size must be positive");
    }
    RadixVector radix(std::vector<int>(n, 3));
    Ket out = Ket::Zero(radix.total_dim());
    std::vector<int> levels(n, kBot);
    double amp = 1 / std::sqrt(static_cast<double>(n));
    for (int site = 0; site < n; site++) {
        for (int l = 0; l < 2; l++) {
            levels[site] = l;
            out[radix.index_of(levels)] += amp * psi[l];
        }
        levels[site] = kBot;
    }
    return out;
}

MixedRadixState codeword(const Ket &psi, int n) {
    return MixedRadixState::trusted_pure(RadixVector(std::vector<int>(n, 3)), codeword_vector(psi, n));
}

MixedRadixState encode(const Ket &psi, int n) {
    validate_logical(psi);
    if (n < 2) {
        throw std::invalid_argument("block size must be at least 2");
    }
    MixedRadixState w;
    if (is_power_of_two(n)) {
        w = prepare_w_levels(n, 3, 1).state;
    } else if (n == 3) {
        w = prepare_w3_qutrit();
    } else {
        w = MixedRadixState::trusted_pure(RadixVector(std::vector<int>(n, 3)), w_vector_levels(n, 3, 1));
    }
    w = apply_to_all(std::move(w), gate_u02());
    return apply_to_all(std::move(w), gate_uenc(psi));
}

MixedRadixState encode_two(const Ket &psi, const Ket &phi) {
    validate_logical(psi);
    validate_logical(phi);
    RadixVector radix({3, 3, 3, 3});
    MixedRadixState s = basis_state(radix, {0, 0, 0, 0});
    Operator x = gates::embed(gates::pauli_x(), 3);
    GateSpec cnot(gates::controlled_on_level(3, 1, x), {3, 3}, "CNOT");
    s = apply_unitary(s, GateSpec(gates::embed(gates::hadamard(), 3), {3}, "H"), {0});
    s = apply_unitary(s, cnot, {0, 1});
    s = apply_unitary(s, GateSpec(gates::controlled_on_level(3, 0, x), {3, 3}, "C0-X"), {0, 2});
    s = apply_unitary(s, cnot, {2, 3});
    s = apply_to_all(std::move(s), gate_u02());
    GateSpec u = gate_uenc(psi);
    GateSpec v = gate_venc(phi);
    s = apply_unitary(s, u, {0});
    s = apply_unitary(s, v, {1});
    s = apply_unitary(s, u, {2});
    s = apply_unitary(s, v, {3});
    return s;
}

MixedRadixState encode_two_logical(const Ket &logical4) {
    if (logical4.size() != 4 || std::abs(logical4.squaredNorm() - 1) > kConstructionTol) {
        throw std::invalid_argument("two-qubit logical input must be a unit vector of length 4");
    }
    RadixVector radix({3, 3, 3, 3});
    Ket out = Ket::Zero(radix.total_dim());
    double r = 1 / std::sqrt(2.0);
    for (int a = 0; a < 2; a++) {
        for (int b = 0; b < 2; b++) {
            Complex c = logical4[2 * a + b];
            out[radix.index_of(std::vector<int>{a, b, kBot, kBot})] += r * c;
            out[radix.index_of(std::vector<int>{kBot, kBot, a, b})] += r * c;
        }
    }
    return MixedRadixState::trusted_pure(radix, out);
}

MixedRadixState apply_transversal_cnot(const MixedRadixState &state) {
    if (state.num_sites() != 4) {
        throw std::invalid_argument("transversal CNOT expects a four-site encoding");
    }
    require_qutrits(state);
    GateSpec g = gate_transversal_cnot();
    MixedRadixState s = apply_unitary(state, g, {0, 1});
    return apply_unitary(s, g, {2, 3});
}

EncodeAltResult encode_alt(const Ket &psi, int n) {
    validate_logical(psi);
    if (!is_power_of_two(n) || n < 2) {
        throw std::invalid_argument("alternative encoder needs n a power of two, got " + std::to_string(n));
    }
    EncodeAltResult out;
    RadixVector one({3});
    out.state = apply_unitary(basis_state(one, {1}), gate_uenc(psi), {0});
    out.counts.single_site++;
    GateSpec cswap(gates::cswap(3), {2, 3, 3}, "CSWAP");
    while (static_cast<int>(out.state.num_sites()) < n) {
        int m = static_cast<int>(out.state.num_sites());
        std::vector<int> dims(m, 3);
        dims.push_back(2);
        std::vector<int> levels(m, kBot);
        levels.push_back(0);
        MixedRadixState s = tensor(out.state, basis_state(RadixVector(dims), levels));
        int anc = 2 * m;
        s = apply_unitary(s, GateSpec(gates::hadamard(), {2}, "H"), {anc});
        out.counts.single_site++;
        for (int i = 0; i < m; i++) {
            s = apply_unitary(s, cswap, {anc, i, m + i});
            out.counts.cswaps++;
        }
        for (int i = 0; i < m; i++) {
            s = apply_presence_pair(s, m + i, anc, &out.counts);
        }
        out.max_ancilla_residual = std::max(out.max_ancilla_residual, ancilla_residual(s, anc));
        out.state = discard_site(s, anc, 0);
        out.stages++;
    }
    return out;
}

MixedRadixState logical_unitary(const MixedRadixState &cw, const Operator &u) {
    if (u.rows() != 2 || u.cols() != 2) {
        throw std::invalid_argument("logical unitary must be 2x2");
    }
    require_qutrits(cw);
    return apply_to_all(cw, GateSpec(gates::embed(u, 3), {3}, "U+1"));
}

// ---------------------------------------------------------------------------

ErasedBlock erase(const MixedRadixState &cw, const std::vector<int> &erased) {
    int n = static_cast<int>(cw.num_sites());
    std::vector<bool> gone(n, false);
    for (int e : erased) {
        if (e < 0 || e >= n) {
            throw std::out_of_range("erased site " + std::to_string(e) + " outside the block");
        }
        if (gone[e]) {
            throw std::invalid_argument("erased site listed twice");
        }
        gone[e] = true;
    }
    ErasedBlock out;
    out.erased_sites = erased;
    std::sort(out.erased_sites.begin(), out.erased_sites.end());
    for (int i = 0; i < n; i++) {
        if (!gone[i]) {
            out.kept_sites.push_back(i);
        }
    }
    if (out.kept_sites.empty()) {
        throw std::invalid_argument("cannot erase every site of a block");
    }
    out.state = erased.empty() ? cw : partial_trace(cw, out.kept_sites);
    return out;
}

namespace {

struct MeasureLayout {
    int n = 0;
    int m = 0;
    std::vector<std::pair<int, int>> pairs;  // (qudit, ancilla)
};

DecodeOutcome run_measure_decoder(const MixedRadixState &state, const MeasureLayout &layout, bool heralded) {
    require_qutrits(state);
    int n = layout.n;
    int m = layout.m;
    RadixVector q_radix = state.radix();
    RadixVector joint_radix = q_radix.concat(RadixVector(std::vector<int>(m, 2)));
    auto anc_sites = iota_sites(n, m);
    GateSpec swap(gates::swap(3), {3, 3}, "SWAP");

    DecodeOutcome out;
    out.num_ancillas = m;
    for (std::size_t k = 0; k < layout.pairs.size(); k++) {
        out.counts.controlled_nots += 2;
    }
    std::map<std::size_t, std::vector<PureComponent>> by_outcome;
    for (const auto &comp : to_ensemble(state)) {
        MixedRadixState s = MixedRadixState::trusted_pure(joint_radix, with_ancillas(comp.ket, m));
        for (auto [q, a] : layout.pairs) {
            s = apply_presence_pair(s, q, a);
        }
        for (auto &br : enumerate_measurement(s, anc_sites)) {
            MixedRadixState post = std::move(br.post_state);
            for (int a = m; a-- > 0;) {
                post = discard_site(post, n + a, br.outcome[a]);
            }
            std::size_t b = br.outcome_index;
            int src = heralded ? static_cast<int>(b) - 1 : static_cast<int>(b);
            if (src > 0) {
                post = apply_unitary(post, swap, {0, src});
            }
            by_outcome[b].push_back(PureComponent{comp.weight * br.probability, post.amplitudes()});
        }
    }
    for (auto &[b, comps] : by_outcome) {
        double p = 0;
        for (const auto &c : comps) {
            p += c.weight;
        }
        if (p < kNegligibleProbability) {
            continue;
        }
        DecodeBranch br;
        br.outcome = b;
        br.probability = p;
        br.post_state = from_ensemble(q_radix, comps);
        if (heralded) {
            br.decoded_site = b == 0 ? -1 : static_cast<int>(b - 1);
        } else {
            br.decoded_site = b == 0 ? 0 : static_cast<int>(b);
        }
        if (b >= 2 || (!heralded && b == 1)) {
            out.counts.swaps++;
            out.swap_probability += p;
        }
        out.branches.push_back(std::move(br));
    }
    for (const auto &br : out.branches) {
        if (heralded) {
            if (br.outcome == 0) {
                out.heralded_failure_probability += br.probability;
            } else {
                out.success_probability += br.probability;
            }
        } else {
            // Success means psi is actually present at site 0 afterwards.
            std::array<int, 1> keep{0};
            Operator rho0 = partial_trace(br.post_state, keep).density_matrix();
            out.success_probability += br.probability * (1 - rho0(kBot, kBot).real());
        }
    }
    return out;
}

}  // namespace

DecodeOutcome decode_measure(const MixedRadixState &state) {
    int n = static_cast<int>(state.num_sites());
    if (n < 1) {
        throw std::invalid_argument("decoder needs at least one site");
    }
    MeasureLayout layout;
    layout.n = n;
    layout.m = std::bit_width(static_cast<unsigned>(n));
    for (int i = 0; i < n; i++) {
        unsigned v = static_cast<unsigned>(i + 1);
        for (int a = 0; a < layout.m; a++) {
            if ((v >> (layout.m - 1 - a)) & 1U) {
                layout.pairs.emplace_back(i, n + a);
            }
        }
    }
    return run_measure_decoder(state, layout, true);
}

DecodeOutcome decode_measure_single_ancilla(const MixedRadixState &state) {
    if (state.num_sites() != 2) {
        throw std::invalid_argument("single-ancilla decoder is defined for two sites");
    }
    MeasureLayout layout;
    layout.n = 2;
    layout.m = 1;
    layout.pairs.emplace_back(1, 2);
    return run_measure_decoder(state, layout, false);
}

double decoded_fidelity(const DecodeOutcome &outcome, const Ket &psi) {
    validate_logical(psi);
    Ket target = qutrit_embed(psi);
    double f = 0;
    for (const auto &br : outcome.branches) {
        if (br.decoded_site < 0) {
            continue;
        }
        std::array<int, 1> keep{0};
        Operator rho0 = partial_trace(br.post_state, keep).density_matrix();
        f += br.probability * target.dot(rho0 * target).real();
    }
    return f;
}

ElectiveOutcome decode_elective(const MixedRadixState &state, int target) {
    require_qutrits(state);
    int n = static_cast<int>(state.num_sites());
    if (target < 0 || target >= n) {
        throw std::out_of_range("decode target outside the unerased sites");
    }
    struct Round {
        std::vector<int> vacated;
        std::vector<int> retained;  // retained[i] receives vacated[i]
    };
    std::vector<Round> rounds;
    std::vector<int> cand = iota_sites(0, n);
    while (cand.size() > 1) {
        std::size_t n_vac = cand.size() / 2;
        std::size_t n_keep = cand.size() - n_vac;
        std::vector<int> others;
        for (int c : cand) {
            if (c != target) {
                others.push_back(c);
            }
        }
        Round r;
        r.retained.push_back(target);
        r.retained.insert(r.retained.end(), others.begin(), others.begin() + (n_keep - 1));
        r.vacated.assign(others.begin() + (n_keep - 1), others.end());
        cand = r.retained;
        rounds.push_back(std::move(r));
    }
    int m = static_cast<int>(rounds.size());
    bool reset = m > 0 && is_power_of_two(n);
    RadixVector q_radix = state.radix();
    RadixVector a_radix(std::vector<int>(m, 2));
    RadixVector joint_radix = q_radix.concat(a_radix);
    GateSpec cswap(gates::cswap(3), {2, 3, 3}, "CSWAP");
    GateSpec h(gates::hadamard(), {2}, "H");

    ElectiveOutcome out;
    out.num_ancillas = m;
    out.hadamard_reset = reset;
    for (const auto &r : rounds) {
        out.counts.controlled_nots += 2 * r.vacated.size();
        out.counts.cswaps += r.vacated.size();
    }
    if (reset) {
        out.counts.single_site += m;
    }

    std::vector<PureComponent> joint;
    for (const auto &comp : to_ensemble(state)) {
        MixedRadixState s = MixedRadixState::trusted_pure(joint_radix, with_ancillas(comp.ket, m));
        for (int a = 0; a < m; a++) {
            int anc = n + a;
            for (int v : rounds[a].vacated) {
                s = apply_presence_pair(s, v, anc);
            }
            for (std::size_t i = 0; i < rounds[a].vacated.size(); i++) {
                s = apply_unitary(s, cswap, {anc, rounds[a].vacated[i], rounds[a].retained[i]});
            }
        }
        if (reset) {
            for (int a = 0; a < m; a++) {
                s = apply_unitary(s, h, {n + a});
            }
        }
        joint.push_back(PureComponent{comp.weight, s.amplitudes()});
    }

    auto q_sites = iota_sites(0, n);
    auto a_sites = iota_sites(n, m);
    out.qudits = state_from_sparse(q_radix, sparse_reduce(joint_radix, joint, q_sites));
    out.ancillas = MixedRadixState::trusted_density(
        a_radix, densify(sparse_reduce(joint_radix, joint, a_sites), a_radix.total_dim()));
    if (joint_radix.total_dim() <= kDensityDimCap) {
        out.joint = from_ensemble(joint_radix, joint);
    }
    out.factorization_error = factorization_error(joint_radix, joint, n);

    // Split every component into the part with psi at the target and the rest.
    std::vector<PureComponent> success;
    std::vector<PureComponent> failure;
    for (const auto &c : joint) {
        Ket hit = Ket::Zero(c.ket.size());
        Ket miss = Ket::Zero(c.ket.size());
        for (Eigen::Index i = 0; i < c.ket.size(); i++) {
            (joint_radix.digit(i, target) == kBot ? miss : hit)[i] = c.ket[i];
        }
        double wh = hit.squaredNorm();
        double wm = miss.squaredNorm();
        if (wh > kNegligibleProbability) {
            success.push_back(PureComponent{c.weight * wh, hit / std::sqrt(wh)});
            out.success_probability += c.weight * wh;
        }
        if (wm > kNegligibleProbability) {
            failure.push_back(PureComponent{c.weight * wm, miss / std::sqrt(wm)});
        }
    }
    out.branch_factorization_error = std::max(factorization_error(joint_radix, success, n),
                                              factorization_error(joint_radix, failure, n));
    return out;
}

double expected_swaps(int n) {
    if (n < 1) {
        throw std::invalid_argument("expected_swaps needs n >= 1");
    }
    return static_cast<double>(n - 1) / n;
}

}  // namespace daqec
