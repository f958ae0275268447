// SPDX-License-Identifier: Apache-2.0

#include "daqec/mixed_radix.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace daqec {

namespace {

/// Precomputed addressing for a gate on a subset of sites: `offsets[g]` is the
/// register offset of gate-local basis index g, `bases` are the register
/// indices whose target digits are all zero.
struct SiteMap {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> bases;
};

void check_sites(const RadixVector &radix, std::span<const int> sites) {
    std::vector<bool> seen(radix.num_sites(), false);
    for (int s : sites) {
        if (s < 0 || static_cast<std::size_t>(s) >= radix.num_sites()) {
            throw std::out_of_range("site index " + std::to_string(s) + " out of range");
        }
        if (seen[s]) {
            throw std::invalid_argument("duplicate site " + std::to_string(s));
        }
        seen[s] = true;
    }
}

SiteMap make_site_map(const RadixVector &radix, std::span<const int> sites) {
    SiteMap map;
    std::size_t local_dim = 1;
    for (int s : sites) {
        local_dim *= radix.dim(s);
    }
    map.offsets.resize(local_dim);
    for (std::size_t g = 0; g < local_dim; g++) {
        std::size_t rem = g;
        std::size_t off = 0;
        for (std::size_t m = sites.size(); m-- > 0;) {
            std::size_t d = radix.dim(sites[m]);
            off += (rem % d) * radix.stride(sites[m]);
            rem /= d;
        }
        map.offsets[g] = off;
    }
    map.bases.reserve(radix.total_dim() / local_dim);
    for (std::size_t i = 0; i < radix.total_dim(); i++) {
        bool zero = true;
        for (int s : sites) {
            if (radix.digit(i, s) != 0) {
                zero = false;
                break;
            }
        }
        if (zero) {
            map.bases.push_back(i);
        }
    }
    return map;
}

/// col <- (matrix on targets) col, for one register-sized column.
void apply_to_column(Complex *col, const SiteMap &map, const Operator &m, std::vector<Complex> &in,
                     std::vector<Complex> &out) {
    std::size_t g_dim = map.offsets.size();
    for (std::size_t base : map.bases) {
        for (std::size_t g = 0; g < g_dim; g++) {
            in[g] = col[base + map.offsets[g]];
        }
        for (std::size_t r = 0; r < g_dim; r++) {
            Complex acc = 0;
            for (std::size_t c = 0; c < g_dim; c++) {
                acc += m(r, c) * in[c];
            }
            out[r] = acc;
        }
        for (std::size_t g = 0; g < g_dim; g++) {
            col[base + map.offsets[g]] = out[g];
        }
    }
}

/// Left-multiplies every column of `cols` by the operator acting on `map`'s sites.
void apply_left(Operator &cols, const SiteMap &map, const Operator &m) {
    std::vector<Complex> in(map.offsets.size());
    std::vector<Complex> out(map.offsets.size());
    for (Eigen::Index c = 0; c < cols.cols(); c++) {
        apply_to_column(cols.col(c).data(), map, m, in, out);
    }
}

void apply_left(Ket &ket, const SiteMap &map, const Operator &m) {
    std::vector<Complex> in(map.offsets.size());
    std::vector<Complex> out(map.offsets.size());
    apply_to_column(ket.data(), map, m, in, out);
}

/// m rho m^dag.
Operator conjugate_by(const Operator &rho, const SiteMap &map, const Operator &m) {
    Operator left = rho;
    apply_left(left, map, m);
    Operator t = left.adjoint();
    apply_left(t, map, m);
    return t.adjoint();
}

void check_target_dims(const RadixVector &radix, std::span<const int> sites, std::span<const int> expected) {
    if (sites.size() != expected.size()) {
        throw std::invalid_argument("gate arity " + std::to_string(expected.size()) + " does not match " +
                                    std::to_string(sites.size()) + " target sites");
    }
    check_sites(radix, sites);
    for (std::size_t m = 0; m < sites.size(); m++) {
        if (radix.dim(sites[m]) != expected[m]) {
            throw std::invalid_argument("site " + std::to_string(sites[m]) + " has dimension " +
                                        std::to_string(radix.dim(sites[m])) + " but the operation expects " +
                                        std::to_string(expected[m]));
        }
    }
}

Operator kron(const Operator &a, const Operator &b) {
    Operator r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); i++) {
        for (Eigen::Index j = 0; j < a.cols(); j++) {
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return r;
}

/// Register index -> row-major index over the listed sites.
std::size_t sub_index(const RadixVector &radix, std::size_t i, std::span<const int> sites) {
    std::size_t r = 0;
    for (int s : sites) {
        r = r * radix.dim(s) + radix.digit(i, s);
    }
    return r;
}

std::string digits_string(const RadixVector &radix, std::size_t index) {
    auto digits = radix.digits_of(index);
    bool wide = std::any_of(radix.dims().begin(), radix.dims().end(), [](int d) { return d > 10; });
    std::string s;
    for (std::size_t k = 0; k < digits.size(); k++) {
        if (wide && k > 0) {
            s += ',';
        }
        s += std::to_string(digits[k]);
    }
    return s;
}

std::vector<double> outcome_probabilities(const MixedRadixState &state, std::span<const int> sites,
                                          std::size_t n_outcomes) {
    const auto &radix = state.radix();
    std::vector<double> probs(n_outcomes, 0.0);
    if (state.is_pure()) {
        const Ket &psi = state.amplitudes();
        for (std::size_t i = 0; i < radix.total_dim(); i++) {
            probs[sub_index(radix, i, sites)] += std::norm(psi[i]);
        }
    } else {
        const Operator &rho = state.density_matrix();
        for (std::size_t i = 0; i < radix.total_dim(); i++) {
            probs[sub_index(radix, i, sites)] += rho(i, i).real();
        }
    }
    return probs;
}

MeasurementBranch collapse(const MixedRadixState &state, std::span<const int> sites, std::size_t outcome_index,
                           double probability) {
    const auto &radix = state.radix();
    MeasurementBranch branch;
    branch.outcome_index = outcome_index;
    branch.probability = probability;
    branch.outcome.resize(sites.size());
    std::size_t rem = outcome_index;
    for (std::size_t m = sites.size(); m-- > 0;) {
        branch.outcome[m] = static_cast<int>(rem % radix.dim(sites[m]));
        rem /= radix.dim(sites[m]);
    }
    std::vector<bool> keep(radix.total_dim());
    for (std::size_t i = 0; i < radix.total_dim(); i++) {
        keep[i] = sub_index(radix, i, sites) == outcome_index;
    }
    double scale = 1.0 / std::sqrt(probability);
    if (state.is_pure()) {
        Ket post = Ket::Zero(radix.total_dim());
        const Ket &psi = state.amplitudes();
        for (std::size_t i = 0; i < radix.total_dim(); i++) {
            if (keep[i]) {
                post[i] = psi[i] * scale;
            }
        }
        branch.post_state = MixedRadixState::trusted_pure(radix, std::move(post));
    } else {
        const Operator &rho = state.density_matrix();
        Operator post = Operator::Zero(radix.total_dim(), radix.total_dim());
        for (std::size_t c = 0; c < radix.total_dim(); c++) {
            if (!keep[c]) {
                continue;
            }
            for (std::size_t r = 0; r < radix.total_dim(); r++) {
                if (keep[r]) {
                    post(r, c) = rho(r, c) / probability;
                }
            }
        }
        branch.post_state = MixedRadixState::trusted_density(radix, std::move(post));
    }
    return branch;
}

void check_density_dim(std::size_t dim) {
    if (dim > kDensityDimCap) {
        throw std::length_error("density operator of dimension " + std::to_string(dim) + " exceeds the cap of " +
                                std::to_string(kDensityDimCap));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// RadixVector

RadixVector::RadixVector(std::vector<int> dims, std::size_t cap) : dims_(std::move(dims)) {
    strides_.resize(dims_.size());
    total_ = 1;
    for (std::size_t k = dims_.size(); k-- > 0;) {
        if (dims_[k] < 2) {
            throw std::invalid_argument("site dimension must be at least 2, got " + std::to_string(dims_[k]));
        }
        strides_[k] = total_;
        if (total_ > cap / static_cast<std::size_t>(dims_[k])) {
            throw std::length_error("register dimension exceeds the cap of " + std::to_string(cap));
        }
        total_ *= dims_[k];
    }
}

std::size_t RadixVector::index_of(std::span<const int> levels) const {
    if (levels.size() != dims_.size()) {
        throw std::invalid_argument("expected " + std::to_string(dims_.size()) + " levels, got " +
                                    std::to_string(levels.size()));
    }
    std::size_t index = 0;
    for (std::size_t k = 0; k < dims_.size(); k++) {
        if (levels[k] < 0 || levels[k] >= dims_[k]) {
            throw std::out_of_range("level " + std::to_string(levels[k]) + " out of range for site " +
                                    std::to_string(k) + " of dimension " + std::to_string(dims_[k]));
        }
        index += levels[k] * strides_[k];
    }
    return index;
}

std::vector<int> RadixVector::digits_of(std::size_t index) const {
    std::vector<int> out(dims_.size());
    for (std::size_t k = 0; k < dims_.size(); k++) {
        out[k] = digit(index, k);
    }
    return out;
}

RadixVector RadixVector::select(std::span<const int> sites) const {
    std::vector<int> d;
    d.reserve(sites.size());
    for (int s : sites) {
        d.push_back(dims_.at(s));
    }
    return RadixVector(std::move(d));
}

RadixVector RadixVector::concat(const RadixVector &other) const {
    std::vector<int> d = dims_;
    d.insert(d.end(), other.dims_.begin(), other.dims_.end());
    return RadixVector(std::move(d));
}

// ---------------------------------------------------------------------------
// MixedRadixState

MixedRadixState MixedRadixState::pure(RadixVector radix, Ket amplitudes) {
    if (static_cast<std::size_t>(amplitudes.size()) != radix.total_dim()) {
        throw std::invalid_argument("amplitude vector length does not match the register dimension");
    }
    double norm2 = amplitudes.squaredNorm();
    if (std::abs(norm2 - 1.0) > kConstructionTol) {
        throw std::invalid_argument("pure state is not normalized (norm^2 = " + std::to_string(norm2) + ")");
    }
    return MixedRadixState(std::move(radix), std::move(amplitudes));
}

MixedRadixState MixedRadixState::density(RadixVector radix, Operator rho) {
    std::size_t dim = radix.total_dim();
    check_density_dim(dim);
    if (static_cast<std::size_t>(rho.rows()) != dim || static_cast<std::size_t>(rho.cols()) != dim) {
        throw std::invalid_argument("density matrix shape does not match the register dimension");
    }
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kConstructionTol) {
        throw std::invalid_argument("density matrix is not Hermitian");
    }
    if (std::abs(rho.trace() - Complex(1.0)) > kConstructionTol) {
        throw std::invalid_argument("density matrix trace is not 1");
    }
    // Positivity: a PSD matrix has zero rows wherever its diagonal vanishes,
    // so the spectrum is determined by the diagonal's support.
    std::vector<Eigen::Index> support;
    for (std::size_t i = 0; i < dim; i++) {
        double d = rho(i, i).real();
        if (d < -kEvolutionTol) {
            throw std::invalid_argument("density matrix has a negative diagonal entry");
        }
        if (d > kNegligibleProbability) {
            support.push_back(static_cast<Eigen::Index>(i));
        } else if (rho.row(i).cwiseAbs().maxCoeff() > kEvolutionTol) {
            throw std::invalid_argument("density matrix is not positive semidefinite");
        }
    }
    Operator sub(support.size(), support.size());
    for (std::size_t a = 0; a < support.size(); a++) {
        for (std::size_t b = 0; b < support.size(); b++) {
            sub(a, b) = rho(support[a], support[b]);
        }
    }
    Eigen::SelfAdjointEigenSolver<Operator> eig(sub, Eigen::EigenvaluesOnly);
    if (support.size() > 0 && eig.eigenvalues().minCoeff() < -kEvolutionTol) {
        throw std::invalid_argument("density matrix has a negative eigenvalue");
    }
    return MixedRadixState(std::move(radix), std::move(rho));
}

MixedRadixState MixedRadixState::trusted_pure(RadixVector radix, Ket amplitudes) {
    return MixedRadixState(std::move(radix), std::move(amplitudes));
}

MixedRadixState MixedRadixState::trusted_density(RadixVector radix, Operator rho) {
    check_density_dim(radix.total_dim());
    return MixedRadixState(std::move(radix), std::move(rho));
}

const Ket &MixedRadixState::amplitudes() const {
    if (!is_pure()) {
        throw std::logic_error("state is a density operator, not a pure state");
    }
    return std::get<Ket>(repr_);
}

const Operator &MixedRadixState::density_matrix() const {
    if (is_pure()) {
        throw std::logic_error("state is pure; use to_density_matrix()");
    }
    return std::get<Operator>(repr_);
}

Operator MixedRadixState::to_density_matrix() const {
    if (is_pure()) {
        check_density_dim(radix_.total_dim());
        const Ket &psi = std::get<Ket>(repr_);
        return psi * psi.adjoint();
    }
    return std::get<Operator>(repr_);
}

MixedRadixState MixedRadixState::as_density() const {
    return trusted_density(radix_, to_density_matrix());
}

double MixedRadixState::trace() const {
    if (is_pure()) {
        return std::get<Ket>(repr_).squaredNorm();
    }
    return std::get<Operator>(repr_).trace().real();
}

std::string MixedRadixState::dump() const {
    std::string out;
    char buf[128];
    if (is_pure()) {
        const Ket &psi = std::get<Ket>(repr_);
        for (std::size_t i = 0; i < radix_.total_dim(); i++) {
            if (std::abs(psi[i]) < kNegligibleProbability) {
                continue;
            }
            std::snprintf(buf, sizeof(buf), "\t%.17g\t%.17g\n", psi[i].real(), psi[i].imag());
            out += std::to_string(i) + "\t" + digits_string(radix_, i) + buf;
        }
    } else {
        const Operator &rho = std::get<Operator>(repr_);
        for (std::size_t r = 0; r < radix_.total_dim(); r++) {
            for (std::size_t c = 0; c < radix_.total_dim(); c++) {
                if (std::abs(rho(r, c)) < kNegligibleProbability) {
                    continue;
                }
                std::snprintf(buf, sizeof(buf), "\t%.17g\t%.17g\n", rho(r, c).real(), rho(r, c).imag());
                out += std::to_string(r) + "\t" + std::to_string(c) + "\t" + digits_string(radix_, r) + "\t" +
                       digits_string(radix_, c) + buf;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// GateSpec / KrausChannel

GateSpec::GateSpec(Operator matrix, std::vector<int> site_dims, std::string name)
    : matrix_(std::move(matrix)), site_dims_(std::move(site_dims)), name_(std::move(name)) {
    Eigen::Index n = 1;
    for (int d : site_dims_) {
        if (d < 2) {
            throw std::invalid_argument("gate site dimension must be at least 2");
        }
        n *= d;
    }
    if (matrix_.rows() != n || matrix_.cols() != n) {
        throw std::invalid_argument("gate matrix size " + std::to_string(matrix_.rows()) + "x" +
                                    std::to_string(matrix_.cols()) + " does not match site dimensions (" +
                                    std::to_string(n) + ")");
    }
    double err = (matrix_.adjoint() * matrix_ - Operator::Identity(n, n)).cwiseAbs().maxCoeff();
    if (err > kConstructionTol) {
        throw std::invalid_argument("gate matrix is not unitary (deviation " + std::to_string(err) + ")");
    }
}

GateSpec GateSpec::permuted(std::span<const int> order) const {
    if (order.size() != site_dims_.size()) {
        throw std::invalid_argument("permutation length does not match gate arity");
    }
    RadixVector old_radix(site_dims_);
    std::vector<int> new_dims;
    for (int o : order) {
        new_dims.push_back(site_dims_.at(o));
    }
    RadixVector new_radix(new_dims);
    std::size_t n = old_radix.total_dim();
    std::vector<std::size_t> to_old(n);
    std::vector<int> old_digits(site_dims_.size());
    for (std::size_t g = 0; g < n; g++) {
        auto nd = new_radix.digits_of(g);
        for (std::size_t m = 0; m < order.size(); m++) {
            old_digits[order[m]] = nd[m];
        }
        to_old[g] = old_radix.index_of(old_digits);
    }
    Operator m(n, n);
    for (std::size_t r = 0; r < n; r++) {
        for (std::size_t c = 0; c < n; c++) {
            m(r, c) = matrix_(to_old[r], to_old[c]);
        }
    }
    return GateSpec(std::move(m), std::move(new_dims), name_);
}

GateSpec GateSpec::adjoint() const {
    return GateSpec(matrix_.adjoint(), site_dims_, name_ + "^dag");
}

KrausChannel::KrausChannel(std::vector<Operator> ops, std::vector<int> site_dims)
    : ops_(std::move(ops)), site_dims_(std::move(site_dims)) {
    if (ops_.empty()) {
        throw std::invalid_argument("channel needs at least one Kraus operator");
    }
    Eigen::Index n = 1;
    for (int d : site_dims_) {
        n *= d;
    }
    Operator sum = Operator::Zero(n, n);
    for (const auto &k : ops_) {
        if (k.rows() != n || k.cols() != n) {
            throw std::invalid_argument("Kraus operator size does not match site dimensions");
        }
        sum += k.adjoint() * k;
    }
    double err = (sum - Operator::Identity(n, n)).cwiseAbs().maxCoeff();
    if (err > kEvolutionTol) {
        throw std::invalid_argument("Kraus operators violate completeness (deviation " + std::to_string(err) + ")");
    }
}

// ---------------------------------------------------------------------------
// Operations

MixedRadixState basis_state(const RadixVector &radix, std::span<const int> levels) {
    std::size_t index = radix.index_of(levels);
    Ket psi = Ket::Zero(radix.total_dim());
    psi[index] = 1.0;
    return MixedRadixState::trusted_pure(radix, std::move(psi));
}

MixedRadixState basis_state(const RadixVector &radix, std::initializer_list<int> levels) {
    return basis_state(radix, std::span<const int>(levels.begin(), levels.size()));
}

MixedRadixState tensor(const MixedRadixState &a, const MixedRadixState &b) {
    RadixVector radix = a.radix().concat(b.radix());
    if (a.is_pure() && b.is_pure()) {
        const Ket &x = a.amplitudes();
        const Ket &y = b.amplitudes();
        Ket out(x.size() * y.size());
        for (Eigen::Index i = 0; i < x.size(); i++) {
            out.segment(i * y.size(), y.size()) = x[i] * y;
        }
        return MixedRadixState::trusted_pure(std::move(radix), std::move(out));
    }
    check_density_dim(radix.total_dim());
    return MixedRadixState::trusted_density(std::move(radix), kron(a.to_density_matrix(), b.to_density_matrix()));
}

MixedRadixState apply_unitary(const MixedRadixState &state, const GateSpec &gate, std::span<const int> sites) {
    check_target_dims(state.radix(), sites, gate.site_dims());
    SiteMap map = make_site_map(state.radix(), sites);
    if (state.is_pure()) {
        Ket psi = state.amplitudes();
        apply_left(psi, map, gate.matrix());
        return MixedRadixState::trusted_pure(state.radix(), std::move(psi));
    }
    return MixedRadixState::trusted_density(state.radix(), conjugate_by(state.density_matrix(), map, gate.matrix()));
}

MixedRadixState apply_unitary(const MixedRadixState &state, const GateSpec &gate, std::initializer_list<int> sites) {
    return apply_unitary(state, gate, std::span<const int>(sites.begin(), sites.size()));
}

MixedRadixState apply_channel(const MixedRadixState &state, const KrausChannel &ch, std::span<const int> sites) {
    check_target_dims(state.radix(), sites, ch.site_dims());
    SiteMap map = make_site_map(state.radix(), sites);
    Operator rho = state.to_density_matrix();
    Operator out = Operator::Zero(rho.rows(), rho.cols());
    for (const auto &k : ch.ops()) {
        out += conjugate_by(rho, map, k);
    }
    return MixedRadixState::trusted_density(state.radix(), std::move(out));
}

MixedRadixState apply_channel(const MixedRadixState &state, const KrausChannel &ch, std::initializer_list<int> sites) {
    return apply_channel(state, ch, std::span<const int>(sites.begin(), sites.size()));
}

std::vector<MeasurementBranch> enumerate_measurement(const MixedRadixState &state, std::span<const int> sites) {
    check_sites(state.radix(), sites);
    std::size_t n_outcomes = 1;
    for (int s : sites) {
        n_outcomes *= state.radix().dim(s);
    }
    auto probs = outcome_probabilities(state, sites, n_outcomes);
    std::vector<MeasurementBranch> out;
    for (std::size_t o = 0; o < n_outcomes; o++) {
        if (probs[o] >= kNegligibleProbability) {
            out.push_back(collapse(state, sites, o, probs[o]));
        }
    }
    return out;
}

MeasurementBranch sample_measurement(const MixedRadixState &state, std::span<const int> sites, Rng &rng) {
    check_sites(state.radix(), sites);
    std::size_t n_outcomes = 1;
    for (int s : sites) {
        n_outcomes *= state.radix().dim(s);
    }
    auto probs = outcome_probabilities(state, sites, n_outcomes);
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    double u = uniform01(rng) * total;
    std::size_t last_nonzero = 0;
    for (std::size_t o = 0; o < n_outcomes; o++) {
        if (probs[o] <= 0) {
            continue;
        }
        last_nonzero = o;
        if (u < probs[o]) {
            return collapse(state, sites, o, probs[o]);
        }
        u -= probs[o];
    }
    return collapse(state, sites, last_nonzero, probs[last_nonzero]);
}

MixedRadixState partial_trace(const MixedRadixState &state, std::span<const int> keep_sites) {
    if (keep_sites.empty()) {
        throw std::invalid_argument("partial trace needs at least one kept site");
    }
    const auto &radix = state.radix();
    check_sites(radix, keep_sites);
    std::vector<int> rest;
    for (std::size_t s = 0; s < radix.num_sites(); s++) {
        if (std::find(keep_sites.begin(), keep_sites.end(), static_cast<int>(s)) == keep_sites.end()) {
            rest.push_back(static_cast<int>(s));
        }
    }
    RadixVector kept = radix.select(keep_sites);
    check_density_dim(kept.total_dim());
    std::size_t dim_k = kept.total_dim();
    std::size_t dim_r = radix.total_dim() / dim_k;
    // index[k * dim_r + r] = register index of (kept digits k, traced digits r)
    std::vector<std::size_t> index(radix.total_dim());
    for (std::size_t i = 0; i < radix.total_dim(); i++) {
        index[sub_index(radix, i, keep_sites) * dim_r + sub_index(radix, i, rest)] = i;
    }
    Operator out = Operator::Zero(dim_k, dim_k);
    if (state.is_pure()) {
        const Ket &psi = state.amplitudes();
        Operator a(dim_k, dim_r);
        for (std::size_t k = 0; k < dim_k; k++) {
            for (std::size_t r = 0; r < dim_r; r++) {
                a(k, r) = psi[index[k * dim_r + r]];
            }
        }
        out = a * a.adjoint();
    } else {
        const Operator &rho = state.density_matrix();
        for (std::size_t c = 0; c < dim_k; c++) {
            for (std::size_t r = 0; r < dim_k; r++) {
                Complex acc = 0;
                for (std::size_t t = 0; t < dim_r; t++) {
                    acc += rho(index[r * dim_r + t], index[c * dim_r + t]);
                }
                out(r, c) = acc;
            }
        }
    }
    return MixedRadixState::trusted_density(std::move(kept), std::move(out));
}

MixedRadixState partial_trace(const MixedRadixState &state, std::initializer_list<int> keep_sites) {
    return partial_trace(state, std::span<const int>(keep_sites.begin(), keep_sites.size()));
}

double fidelity(const MixedRadixState &state, const MixedRadixState &reference) {
    if (!(state.radix() == reference.radix())) {
        throw std::invalid_argument("fidelity requires states over the same radix");
    }
    if (!reference.is_pure()) {
        throw std::invalid_argument("fidelity reference must be a pure state");
    }
    const Ket &ref = reference.amplitudes();
    if (state.is_pure()) {
        return std::norm(ref.dot(state.amplitudes()));
    }
    return ref.dot(state.density_matrix() * ref).real();
}

MixedRadixState discard_site(const MixedRadixState &state, int site, int level) {
    const auto &radix = state.radix();
    std::array<int, 1> s{site};
    check_sites(radix, s);
    if (radix.num_sites() < 2) {
        throw std::invalid_argument("cannot discard the only site of a register");
    }
    std::vector<int> keep;
    for (std::size_t k = 0; k < radix.num_sites(); k++) {
        if (static_cast<int>(k) != site) {
            keep.push_back(static_cast<int>(k));
        }
    }
    RadixVector kept = radix.select(keep);
    std::vector<std::size_t> map;  // kept index -> register index with site at `level`
    map.reserve(kept.total_dim());
    for (std::size_t i = 0; i < radix.total_dim(); i++) {
        if (radix.digit(i, site) == level) {
            map.push_back(i);
        }
    }
    double prob = 0;
    if (state.is_pure()) {
        const Ket &psi = state.amplitudes();
        Ket out(kept.total_dim());
        for (std::size_t k = 0; k < map.size(); k++) {
            out[k] = psi[map[k]];
        }
        prob = out.squaredNorm();
        if (std::abs(prob - 1.0) > kEvolutionTol) {
            throw std::logic_error("site " + std::to_string(site) + " is not in level " + std::to_string(level) +
                                   " (probability " + std::to_string(prob) + ")");
        }
        return MixedRadixState::trusted_pure(std::move(kept), std::move(out));
    }
    const Operator &rho = state.density_matrix();
    Operator out(kept.total_dim(), kept.total_dim());
    for (std::size_t c = 0; c < map.size(); c++) {
        for (std::size_t r = 0; r < map.size(); r++) {
            out(r, c) = rho(map[r], map[c]);
        }
    }
    prob = out.trace().real();
    if (std::abs(prob - 1.0) > kEvolutionTol) {
        throw std::logic_error("site " + std::to_string(site) + " is not in level " + std::to_string(level) +
                               " (probability " + std::to_string(prob) + ")");
    }
    return MixedRadixState::trusted_density(std::move(kept), std::move(out));
}

MixedRadixState permute_sites(const MixedRadixState &state, std::span<const int> order) {
    const auto &radix = state.radix();
    if (order.size() != radix.num_sites()) {
        throw std::invalid_argument("permutation must list every site");
    }
    check_sites(radix, order);
    RadixVector out_radix = radix.select(order);
    std::vector<std::size_t> to_old(radix.total_dim());
    for (std::size_t i = 0; i < radix.total_dim(); i++) {
        to_old[sub_index(radix, i, order)] = i;
    }
    if (state.is_pure()) {
        const Ket &psi = state.amplitudes();
        Ket out(psi.size());
        for (std::size_t j = 0; j < to_old.size(); j++) {
            out[j] = psi[to_old[j]];
        }
        return MixedRadixState::trusted_pure(std::move(out_radix), std::move(out));
    }
    const Operator &rho = state.density_matrix();
    Operator out(rho.rows(), rho.cols());
    for (std::size_t c = 0; c < to_old.size(); c++) {
        for (std::size_t r = 0; r < to_old.size(); r++) {
            out(r, c) = rho(to_old[r], to_old[c]);
        }
    }
    return MixedRadixState::trusted_density(std::move(out_radix), std::move(out));
}

std::vector<PureComponent> to_ensemble(const MixedRadixState &state) {
    if (state.is_pure()) {
        const Ket &psi = state.amplitudes();
        double w = psi.squaredNorm();
        return {PureComponent{w, psi / std::sqrt(w)}};
    }
    const Operator &rho = state.density_matrix();
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < rho.rows(); i++) {
        if (rho(i, i).real() > kNegligibleProbability) {
            support.push_back(i);
        }
    }
    Operator sub(support.size(), support.size());
    for (std::size_t a = 0; a < support.size(); a++) {
        for (std::size_t b = 0; b < support.size(); b++) {
            sub(a, b) = rho(support[a], support[b]);
        }
    }
    Eigen::SelfAdjointEigenSolver<Operator> eig(sub);
    std::vector<PureComponent> out;
    // Descending weight order.
    for (Eigen::Index k = static_cast<Eigen::Index>(support.size()); k-- > 0;) {
        double w = eig.eigenvalues()[k];
        if (w < kNegligibleProbability) {
            continue;
        }
        Ket v = Ket::Zero(rho.rows());
        for (std::size_t a = 0; a < support.size(); a++) {
            v[support[a]] = eig.eigenvectors()(a, k);
        }
        out.push_back(PureComponent{w, std::move(v)});
    }
    return out;
}

MixedRadixState from_ensemble(const RadixVector &radix, std::span<const PureComponent> comps) {
    double total = 0;
    const PureComponent *heaviest = nullptr;
    for (const auto &c : comps) {
        if (c.weight < kNegligibleProbability) {
            continue;
        }
        total += c.weight;
        if (heaviest == nullptr || c.weight > heaviest->weight) {
            heaviest = &c;
        }
    }
    if (heaviest == nullptr) {
        throw std::invalid_argument("ensemble has no component of positive weight");
    }
    Ket u = heaviest->ket / heaviest->ket.norm();
    double overlap = 0;
    for (const auto &c : comps) {
        if (c.weight >= kNegligibleProbability) {
            overlap += c.weight * std::norm(u.dot(c.ket)) / c.ket.squaredNorm();
        }
    }
    if (overlap >= total * (1 - kConstructionTol)) {
        return MixedRadixState::trusted_pure(radix, std::move(u));
    }
    check_density_dim(radix.total_dim());
    Operator rho = Operator::Zero(radix.total_dim(), radix.total_dim());
    for (const auto &c : comps) {
        if (c.weight >= kNegligibleProbability) {
            Ket v = c.ket / c.ket.norm();
            rho.noalias() += (c.weight / total) * (v * v.adjoint());
        }
    }
    return MixedRadixState::trusted_density(radix, std::move(rho));
}

KrausChannel depolarizing_channel(int d, int n_sites, double p) {
    if (!(p >= 0 && p <= 1)) {
        throw std::invalid_argument("depolarizing parameter must lie in [0, 1]");
    }
    if (d < 2 || n_sites < 1) {
        throw std::invalid_argument("depolarizing channel needs d >= 2 and at least one site");
    }
    std::vector<Operator> single;
    Operator x = gates::shift(d);
    Operator z = gates::clock(d);
    Operator xa = gates::identity(d);
    for (int a = 0; a < d; a++) {
        Operator zb = gates::identity(d);
        for (int b = 0; b < d; b++) {
            single.push_back(xa * zb);
            zb = zb * z;
        }
        xa = xa * x;
    }
    std::vector<Operator> all{Operator::Identity(1, 1)};
    for (int s = 0; s < n_sites; s++) {
        std::vector<Operator> next;
        for (const auto &acc : all) {
            for (const auto &w : single) {
                next.push_back(kron(acc, w));
            }
        }
        all = std::move(next);
    }
    double n_nontrivial = static_cast<double>(all.size() - 1);
    std::vector<Operator> ops;
    if (p < 1) {
        ops.push_back(std::sqrt(1 - p) * all[0]);
    }
    if (p > 0) {
        double c = std::sqrt(p / n_nontrivial);
        for (std::size_t k = 1; k < all.size(); k++) {
            ops.push_back(c * all[k]);
        }
    }
    return KrausChannel(std::move(ops), std::vector<int>(n_sites, d));
}

double trace_norm(const Operator &op) {
    Eigen::SelfAdjointEigenSolver<Operator> eig(op, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Standard gates

namespace gates {

Operator identity(int d) {
    return Operator::Identity(d, d);
}

Operator hadamard() {
    Operator h(2, 2);
    double r = std::numbers::sqrt2 / 2;
    h << r, r, r, -r;
    return h;
}

Operator pauli_x() {
    Operator m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Operator pauli_z() {
    Operator m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Operator pauli_y() {
    Operator m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}

Operator ry(double theta) {
    Operator m(2, 2);
    double c = std::cos(theta / 2);
    double s = std::sin(theta / 2);
    m << c, -s, s, c;
    return m;
}

Operator shift(int d) {
    Operator m = Operator::Zero(d, d);
    for (int j = 0; j < d; j++) {
        m((j + 1) % d, j) = 1;
    }
    return m;
}

Operator clock(int d) {
    Operator m = Operator::Zero(d, d);
    for (int j = 0; j < d; j++) {
        m(j, j) = std::polar(1.0, 2 * std::numbers::pi * j / d);
    }
    return m;
}

Operator embed(const Operator &u, int d) {
    if (u.rows() > d || u.rows() != u.cols()) {
        throw std::invalid_argument("cannot embed a larger operator");
    }
    Operator m = Operator::Identity(d, d);
    m.topLeftCorner(u.rows(), u.cols()) = u;
    return m;
}

Operator controlled_on_levels(int control_dim, std::span<const int> levels, const Operator &target) {
    Eigen::Index t = target.rows();
    Operator m = Operator::Identity(control_dim * t, control_dim * t);
    for (int level : levels) {
        if (level < 0 || level >= control_dim) {
            throw std::out_of_range("control level out of range");
        }
        m.block(level * t, level * t, t, t) = target;
    }
    return m;
}

Operator controlled_on_level(int control_dim, int level, const Operator &target) {
    std::array<int, 1> levels{level};
    return controlled_on_levels(control_dim, levels, target);
}

Operator swap(int d) {
    Operator m = Operator::Zero(d * d, d * d);
    for (int a = 0; a < d; a++) {
        for (int b = 0; b < d; b++) {
            m(b * d + a, a * d + b) = 1;
        }
    }
    return m;
}

Operator cswap(int d) {
    return controlled_on_level(2, 1, swap(d));
}

}  // namespace gates

}  // namespace daqec
