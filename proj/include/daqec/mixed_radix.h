// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "daqec/rng.h"

namespace daqec {

using Complex = std::complex<double>;
using Ket = Eigen::VectorXcd;
using Operator = Eigen::MatrixXcd;

/// Tolerance for validating inputs at construction (unitarity, norms).
inline constexpr double kConstructionTol = 1e-10;
/// Tolerance for checks after evolution (trace preservation, completeness).
inline constexpr double kEvolutionTol = 1e-9;
/// Outcomes and components with probability below this are dropped.
inline constexpr double kNegligibleProbability = 1e-12;

/// Largest total dimension a density operator may have.
inline constexpr std::size_t kDensityDimCap = std::size_t{1} << 12;

/// Ordered list of site dimensions. Indices are row-major with site 0 the most
/// significant digit.
class RadixVector {
   public:
    static constexpr std::size_t kDefaultCap = std::size_t{1} << 22;

    RadixVector() = default;
    explicit RadixVector(std::vector<int> dims, std::size_t cap = kDefaultCap);

    std::size_t num_sites() const { return dims_.size(); }
    int dim(std::size_t site) const { return dims_.at(site); }
    std::span<const int> dims() const { return dims_; }
    std::size_t total_dim() const { return total_; }
    std::size_t stride(std::size_t site) const { return strides_.at(site); }

    std::size_t index_of(std::span<const int> levels) const;
    std::vector<int> digits_of(std::size_t index) const;
    int digit(std::size_t index, std::size_t site) const {
        return static_cast<int>((index / strides_[site]) % static_cast<std::size_t>(dims_[site]));
    }

    /// Radix of the listed sites, in the listed order.
    RadixVector select(std::span<const int> sites) const;
    /// This radix followed by `other`.
    RadixVector concat(const RadixVector &other) const;

    bool operator==(const RadixVector &other) const { return dims_ == other.dims_; }

   private:
    std::vector<int> dims_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 1;
};

/// Exact pure state or density operator over a mixed-radix register.
class MixedRadixState {
   public:
    /// Placeholder: a zero-site register holding the scalar 1.
    MixedRadixState() : repr_(Ket(Ket::Ones(1))) {}

    /// Validated constructors. Throw std::invalid_argument when the
    /// normalization / Hermiticity / positivity invariants fail.
    static MixedRadixState pure(RadixVector radix, Ket amplitudes);
    static MixedRadixState density(RadixVector radix, Operator rho);

    /// Unchecked constructors for internal use by operations that preserve
    /// the invariants by construction.
    static MixedRadixState trusted_pure(RadixVector radix, Ket amplitudes);
    static MixedRadixState trusted_density(RadixVector radix, Operator rho);

    bool is_pure() const { return std::holds_alternative<Ket>(repr_); }
    const RadixVector &radix() const { return radix_; }
    std::size_t num_sites() const { return radix_.num_sites(); }

    const Ket &amplitudes() const;
    const Operator &density_matrix() const;

    /// Density operator of this state (an outer product for pure states).
    Operator to_density_matrix() const;
    MixedRadixState as_density() const;

    /// Norm squared for pure states, trace for density states.
    double trace() const;

    /// Text dump: one line per entry above 1e-12 in magnitude, ascending.
    /// Pure: `index\tdigits\tre\tim`. Density: `row\tcol\trowdigits\tcoldigits\tre\tim`.
    std::string dump() const;

   private:
    MixedRadixState(RadixVector radix, std::variant<Ket, Operator> repr)
        : radix_(std::move(radix)), repr_(std::move(repr)) {}

    RadixVector radix_;
    std::variant<Ket, Operator> repr_;
};

/// A unitary acting on an ordered list of target sites.
class GateSpec {
   public:
    GateSpec(Operator matrix, std::vector<int> site_dims, std::string name = "");

    const Operator &matrix() const { return matrix_; }
    std::span<const int> site_dims() const { return site_dims_; }
    std::size_t arity() const { return site_dims_.size(); }
    const std::string &name() const { return name_; }

    /// The same physical gate with its target sites listed in a different
    /// order: result target m is original target order[m].
    GateSpec permuted(std::span<const int> order) const;
    GateSpec adjoint() const;

   private:
    Operator matrix_;
    std::vector<int> site_dims_;
    std::string name_;
};

/// Completely positive trace preserving map given by Kraus operators.
class KrausChannel {
   public:
    KrausChannel(std::vector<Operator> ops, std::vector<int> site_dims);

    std::span<const Operator> ops() const { return ops_; }
    std::span<const int> site_dims() const { return site_dims_; }

   private:
    std::vector<Operator> ops_;
    std::vector<int> site_dims_;
};

struct MeasurementBranch {
    std::vector<int> outcome;      // one level per measured site
    std::size_t outcome_index = 0; // row-major index of `outcome` over the measured sites
    double probability = 0;
    MixedRadixState post_state;    // measured sites collapsed, still present
};

/// Weighted pure component of a mixed state.
struct PureComponent {
    double weight = 0;
    Ket ket;
};

MixedRadixState basis_state(const RadixVector &radix, std::span<const int> levels);
MixedRadixState basis_state(const RadixVector &radix, std::initializer_list<int> levels);

MixedRadixState tensor(const MixedRadixState &a, const MixedRadixState &b);

MixedRadixState apply_unitary(const MixedRadixState &state, const GateSpec &gate, std::span<const int> sites);
MixedRadixState apply_unitary(const MixedRadixState &state, const GateSpec &gate, std::initializer_list<int> sites);

/// Pure inputs are promoted to density operators.
MixedRadixState apply_channel(const MixedRadixState &state, const KrausChannel &ch, std::span<const int> sites);
MixedRadixState apply_channel(const MixedRadixState &state, const KrausChannel &ch, std::initializer_list<int> sites);

/// Every computational-basis outcome on `sites` with probability above 1e-12.
std::vector<MeasurementBranch> enumerate_measurement(const MixedRadixState &state, std::span<const int> sites);
/// One outcome drawn from the same distribution.
MeasurementBranch sample_measurement(const MixedRadixState &state, std::span<const int> sites, Rng &rng);

MixedRadixState partial_trace(const MixedRadixState &state, std::span<const int> keep_sites);
MixedRadixState partial_trace(const MixedRadixState &state, std::initializer_list<int> keep_sites);

/// <ref|rho|ref>.
double fidelity(const MixedRadixState &state, const MixedRadixState &reference);

/// Removes a site known to hold `level`. Throws if the probability of that
/// level differs from 1 by more than 1e-9.
MixedRadixState discard_site(const MixedRadixState &state, int site, int level);

/// Reorders sites: result site m is original site order[m].
MixedRadixState permute_sites(const MixedRadixState &state, std::span<const int> order);

/// Decomposition of a state into orthogonal weighted pure components. The
/// eigenproblem is solved only on the support of the diagonal, so sparse
/// states of large registers stay cheap.
std::vector<PureComponent> to_ensemble(const MixedRadixState &state);
/// Inverse of to_ensemble. Returns a pure state when the components are all
/// parallel, a density operator otherwise.
MixedRadixState from_ensemble(const RadixVector &radix, std::span<const PureComponent> comps);

/// rho -> (1-p) rho + p/(d^{2n}-1) sum_{W != I} W rho W^dag over
/// Heisenberg-Weyl operators X^a Z^b on each site.
KrausChannel depolarizing_channel(int d, int n_sites, double p);

/// Trace norm (sum of singular values) of a Hermitian operator.
double trace_norm(const Operator &op);

namespace gates {

Operator identity(int d);
Operator hadamard();
Operator pauli_x();
Operator pauli_z();
Operator pauli_y();
Operator ry(double theta);
/// Generalized shift X|j> = |j+1 mod d> and clock Z|j> = w^j |j>.
Operator shift(int d);
Operator clock(int d);
/// Block-diagonal U (+) I: U on the lowest levels, identity above.
Operator embed(const Operator &u, int d);
/// Applies `target` to the second site iff the first site holds `level`.
Operator controlled_on_level(int control_dim, int level, const Operator &target);
/// Applies `target` to the second site iff the first site's level is in `levels`.
Operator controlled_on_levels(int control_dim, std::span<const int> levels, const Operator &target);
Operator swap(int d);
/// Qubit control (site 0) swapping two d-level sites (sites 1, 2).
Operator cswap(int d);

}  // namespace gates

}  // namespace daqec
