// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "daqec/mixed_radix.h"

namespace daqec {

/// Code configuration for a single W-state block. Only d_L = 2 (one encoded
/// qubit, qutrit sites) is exercised here; encode_two uses k = 2 over a
/// block of four sites.
struct WCodeParams {
    int n = 3;
    int d_L = 2;
    int d = 3;
    int k = 1;
    int bot_level = 2;

    void validate() const;
};

/// Qutrit level holding the "logical content not here" flag.
inline constexpr int kBot = 2;

/// Gate tallies accumulated by the circuit builders.
struct GateCounts {
    std::size_t controlled_nots = 0;  // qudit-controlled ancilla flips
    std::size_t cswaps = 0;
    std::size_t swaps = 0;            // classically conditioned swaps
    std::size_t single_site = 0;
    std::size_t other = 0;

    GateCounts &operator+=(const GateCounts &o);
};

/// Checks a length-2 unit vector (within 1e-10).
void validate_logical(const Ket &psi);
/// Canonical orthogonal completion (c1*, -c0*).
Ket orthogonal_complement(const Ket &psi);

/// |0><2| + |2><0| + |1><1|.
GateSpec gate_u02();
/// |psi><1| + |psi_perp><0| + |2><2|.
GateSpec gate_uenc(const Ket &psi);
/// Same construction for the second logical qubit of encode_two.
GateSpec gate_venc(const Ket &phi);
/// CNOT on the {0,1} levels of two qutrits; identity whenever either holds |2>.
GateSpec gate_transversal_cnot();

/// The two controlled-NOTs (control on |0>, then on |1>) from a qutrit onto
/// a qubit ancilla. Sites are (qudit, ancilla).
std::vector<GateSpec> presence_pair_gates();
MixedRadixState apply_presence_pair(const MixedRadixState &state, int qudit_site, int ancilla_site,
                                    GateCounts *counts = nullptr);

// ---------------------------------------------------------------------------
// W states

/// Directly constructed W state: uniform superposition over every placement
/// of one excitation j in 1..d-1 on n sites of dimension d.
Ket w_state_vector(int n, int d);

struct WPrepResult {
    MixedRadixState state;
    /// Largest |rho_anc - |0><0|| entry seen over all scaling ancillas.
    double max_ancilla_residual = 0;
    std::size_t ancillas_used = 0;
};

MixedRadixState prepare_w2(int d);
/// Doubles a W state on n sites using one |+> ancilla. Throws if the input
/// is not a W state (fidelity below 1 - 1e-8).
WPrepResult scale_w(const MixedRadixState &w);
/// n must be a power of two.
WPrepResult prepare_w(int n, int d);

// ---------------------------------------------------------------------------
// Encoders and logical operations

/// Directly constructed codeword (1/sqrt n) sum_i |bot..psi_i..bot>.
Ket codeword_vector(const Ket &psi, int n);
MixedRadixState codeword(const Ket &psi, int n);

/// W preparation, then U02 on every site, then U_enc on every site.
MixedRadixState encode(const Ket &psi, int n);

/// Four-site encoding of psi (x) phi: (|psi phi 2 2> + |2 2 psi phi>)/sqrt 2.
MixedRadixState encode_two(const Ket &psi, const Ket &phi);
/// Direct construction of the same family for an arbitrary two-qubit state.
MixedRadixState encode_two_logical(const Ket &logical4);
/// CNOT_{0,1} (x) CNOT_{2,3} on a four-site encoding.
MixedRadixState apply_transversal_cnot(const MixedRadixState &state);

struct EncodeAltResult {
    MixedRadixState state;
    double max_ancilla_residual = 0;
    std::size_t stages = 0;
    GateCounts counts;
};
/// Encoder built from |+> stage ancillas, CSWAPs and presence pairs only.
EncodeAltResult encode_alt(const Ket &psi, int n);

/// (U (+) 1) applied to every site.
MixedRadixState logical_unitary(const MixedRadixState &codeword, const Operator &u);

// ---------------------------------------------------------------------------
// Erasure and decoding

struct ErasedBlock {
    MixedRadixState state;          // over the unerased sites, in original order
    std::vector<int> kept_sites;    // original indices of the unerased sites
    std::vector<int> erased_sites;
};

/// Traces out the erased sites. Erased positions are kept as metadata only.
ErasedBlock erase(const MixedRadixState &codeword, const std::vector<int> &erased);

struct DecodeBranch {
    std::size_t outcome = 0;    // ancilla readout, ancilla 0 most significant
    double probability = 0;
    int decoded_site = -1;      // location psi was found at, -1 on failure
    MixedRadixState post_state; // qudits only; psi moved to site 0 on success
};

struct DecodeOutcome {
    std::vector<DecodeBranch> branches;
    double success_probability = 0;
    double heralded_failure_probability = 0;
    /// Probability that the classically conditioned swap was applied.
    double swap_probability = 0;
    std::size_t num_ancillas = 0;
    GateCounts counts;
};

/// Measurement decoder with ceil(log2(n+1)) ancillas: site i drives the
/// ancillas set in the binary form of i+1.
DecodeOutcome decode_measure(const MixedRadixState &state);
/// Two-site variant with a single ancilla driven by site 1. Outcome 0 mixes
/// success at site 0 with the all-bot failure, so failure is not heralded.
DecodeOutcome decode_measure_single_ancilla(const MixedRadixState &state);

/// Sum over successful branches of p_b * <psi|rho_site0|psi>.
double decoded_fidelity(const DecodeOutcome &outcome, const Ket &psi);

struct ElectiveOutcome {
    MixedRadixState qudits;                   // reduced state of the n qudits
    MixedRadixState ancillas;                 // reduced state of the ancillas
    std::optional<MixedRadixState> joint;     // present when it fits the density cap
    /// Trace norm of (joint - ancillas (x) qudits).
    double factorization_error = 0;
    /// Same quantity evaluated separately inside the success and the all-bot
    /// branches (max of the two).
    double branch_factorization_error = 0;
    double success_probability = 0;
    std::size_t num_ancillas = 0;
    bool hadamard_reset = false;
    GateCounts counts;
};

/// Moves psi to `target` without measurement, halving the candidate set in
/// each of ceil(log2 n) rounds. When n is a power of two a final layer of H
/// returns the ancillas to |0> in the success branch.
ElectiveOutcome decode_elective(const MixedRadixState &state, int target);

/// Expected number of swaps applied by the measurement decoder when psi is
/// uniformly located among n sites.
double expected_swaps(int n);

}  // namespace daqec
