// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "daqec/allocation.h"
#include "daqec/rng.h"

namespace daqec {

inline constexpr int kSteaneN = 7;
inline constexpr int kSteaneAncillas = 6;
inline constexpr int kMachineBlocks = 7;
inline constexpr int kMachineDataQubits = kMachineBlocks * kSteaneN;
inline constexpr int kMachineQubits = kMachineDataQubits + kMachineBlocks * kSteaneAncillas;

enum class GateKind : uint8_t { H, CNOT, PREP_Z, PREP_X, MEAS_Z, MEAS_X };

struct Gate {
    GateKind kind;
    int q0;       // target of single-qubit ops, control of CNOT
    int q1 = -1;  // CNOT target
};

/// Role and location of a physical qubit. Data qubits have ancilla == -1;
/// ancillas carry the index (0..5) of the generator they measure.
struct QubitTag {
    int block = -1;
    int ancilla = -1;
    int processor = 0;
};

struct CliffordCircuit {
    std::vector<QubitTag> qubits;
    std::vector<Gate> gates;

    std::size_t num_qubits() const { return qubits.size(); }
    /// Throws on out-of-range qubits or preps/measurements on data qubits.
    void validate() const;
};

/// X and Z error bits of every qubit.
class PauliFrame {
   public:
    explicit PauliFrame(std::size_t n) : x_(n, 0), z_(n, 0) {}

    std::size_t size() const { return x_.size(); }
    bool x(int q) const { return x_.at(q); }
    bool z(int q) const { return z_.at(q); }
    void apply_pauli(int q, bool x, bool z) {
        x_.at(q) ^= x;
        z_.at(q) ^= z;
    }

    /// Conjugates the frame through a gate. Returns the flip of a
    /// measurement outcome (false for other gates).
    bool apply(const Gate &g);

   private:
    std::vector<uint8_t> x_;
    std::vector<uint8_t> z_;
};

// ---------------------------------------------------------------------------
// Steane block

/// Generator g (0..2) covers the qubits j with bit (2 - g) of j+1 set. The
/// three X-type and three Z-type generators share this support.
bool generator_covers(int g, int j);

/// Three-bit values: bit (2 - g) is generator g's outcome, so a single error
/// on qubit j reads as j + 1.
struct Syndrome {
    uint8_t x_type = 0;  // X-type generators, flagged by Z errors
    uint8_t z_type = 0;  // Z-type generators, flagged by X errors
};

int data_qubit(int block, int j);
int ancilla_qubit(int block, int s);

Syndrome syndrome(const PauliFrame &frame, int block);

struct LogicalFlip {
    bool x = false;  // residual anticommutes with logical Z
    bool z = false;  // residual anticommutes with logical X
};

/// Weight-<=1 correction per syndrome; -1 for the trivial syndrome.
int lookup_correction(uint8_t syndrome);

/// Applies the lookup correction in place and reports the logical flips of
/// the residual.
LogicalFlip lookup_decode(PauliFrame &frame, int block);

/// Decodes a bare 7-bit X pattern (bit j = qubit j): true on logical flip.
bool decode_pattern_fails(uint8_t pattern);

// ---------------------------------------------------------------------------
// Machine layout and circuits

enum class Scheme { kLocal, kDistributed };

const char *scheme_name(Scheme s);

/// Seven blocks on seven processors of 13 qubits. Local: block i and its
/// ancillas on processor i. Distributed: data qubit j of every block on
/// processor j, ancilla s of block i on processor (i + s + 1) mod 7.
struct SteaneMachine {
    Scheme scheme;
    std::vector<QubitTag> tags;
    Allocation data_allocation;  // (block, j) -> processor
};

SteaneMachine steane_machine(Scheme scheme);

struct LogicalOp {
    bool cnot = false;
    int a = 0;  // H target or CNOT control
    int b = 0;  // CNOT target
};

/// Mirror segments [H 0; CNOT 0->1 ... 5->6; the chain reversed; H 0] tiled
/// until `depth` logical CNOT layers are reached. A partial final segment
/// keeps its mirror; an odd remainder ends with one CNOT 0->1, which leaves
/// the ideal |0_L>^7 output unchanged.
std::vector<LogicalOp> ghz_mirror_logical(int n_blocks, int depth);

/// Transversal physical circuit of the logical program.
CliffordCircuit build_ghz_mirror(const SteaneMachine &machine, int depth);

/// Per generator: prepare the ancilla, four CNOTs with the support, measure.
void append_syndrome_extraction(CliffordCircuit &circuit, int block);
CliffordCircuit syndrome_extraction_circuit(const SteaneMachine &machine, int block);

/// Mirror circuit followed by extraction on every block.
CliffordCircuit build_experiment_circuit(const SteaneMachine &machine, int depth);

struct GateCensus {
    std::size_t local = 0;
    std::size_t remote = 0;
};

/// Two-qubit gates split by whether the endpoints share a processor.
GateCensus census(const CliffordCircuit &circuit);

// ---------------------------------------------------------------------------
// Noise and sampling

struct NoiseSpec {
    double p_local = 0;
    double p_remote = 0;

    void validate() const;
};

/// Bits of `pauli` (1..15): 1 = X on q0, 2 = Z on q0, 4 = X on q1, 8 = Z on q1.
struct Fault {
    std::size_t gate = 0;
    uint8_t pauli = 0;
};

struct NoiseLocations {
    std::vector<std::size_t> local;
    std::vector<std::size_t> remote;
};

NoiseLocations noise_locations(const CliffordCircuit &circuit);

/// Faults after two-qubit gates, sorted by gate index. Locations are visited
/// by geometric skipping, local list first.
std::vector<Fault> sample_faults(const NoiseLocations &locs, const NoiseSpec &noise, Rng &rng);

struct TrialResult {
    std::vector<LogicalFlip> blocks;

    /// No logical X flip anywhere: the ideal |0_L>^7 output is intact.
    bool success() const;
};

/// Frame simulation of the circuit with the given faults, followed by the
/// terminal decode of every block: the measured syndrome drives a lookup
/// correction, then the residual is decoded ideally (a perfect transversal
/// readout).
TrialResult run_circuit_trial(const CliffordCircuit &circuit, std::span<const Fault> faults);
/// Same with faults drawn from `noise` using a generator seeded with `seed`.
TrialResult run_circuit_trial(const CliffordCircuit &circuit, const NoiseSpec &noise, uint64_t seed);

/// Precomputes the linear effect of every possible fault so a trial is a
/// handful of XORs followed by the decode. Produces exactly the results of
/// run_circuit_trial for the same faults.
class FastSampler {
   public:
    explicit FastSampler(const CliffordCircuit &circuit);

    TrialResult run(std::span<const Fault> faults) const;
    TrialResult run(const NoiseSpec &noise, Rng &rng) const;
    const NoiseLocations &locations() const { return locs_; }
    GateCensus gate_census() const { return GateCensus{locs_.local.size(), locs_.remote.size()}; }

   private:
    using Bits = std::array<uint64_t, 3>;

    NoiseLocations locs_;
    std::vector<int> blocks_;              // block ids in the circuit
    std::vector<std::array<Bits, 16>> effect_;  // by gate index, by Pauli
    std::vector<std::size_t> effect_slot_; // gate index -> row of effect_
    std::vector<std::array<int, 6>> meas_bit_;  // per block: bit of each generator's outcome, -1 if absent
};

// ---------------------------------------------------------------------------
// Code capacity

/// Exact failure probability of one block whose qubit j is hit by X, Y or Z
/// with probability rates[j]/3 each.
double block_failure_probability(std::span<const double> rates);

/// Per-block exact failure probabilities for a 7 x 7 allocation.
std::vector<double> code_capacity_failure_probabilities(const Allocation &alloc, std::span<const double> rates);

/// One sampled trial: per-block success.
std::vector<bool> code_capacity_trial(const Allocation &alloc, std::span<const double> rates, uint64_t seed);
std::vector<bool> code_capacity_trial(const Allocation &alloc, std::span<const double> rates, Rng &rng);

/// n_e + 2 n_pauli <= d - 1.
bool correctable(int n_e, int n_pauli, int d);

}  // namespace daqec
