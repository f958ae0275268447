// SPDX-License-Identifier: Apache-2.0

#include "daqec/steane.h"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace daqec {

namespace {

uint8_t hamming_syndrome(uint8_t pattern) {
    uint8_t syn = 0;
    for (int j = 0; j < kSteaneN; j++) {
        if ((pattern >> j) & 1) {
            syn ^= static_cast<uint8_t>(j + 1);
        }
    }
    return syn;
}

uint8_t apply_lookup(uint8_t pattern, uint8_t syn) {
    int c = lookup_correction(syn);
    return c < 0 ? pattern : static_cast<uint8_t>(pattern ^ (1U << c));
}

bool parity7(uint8_t pattern) {
    return std::popcount(static_cast<unsigned>(pattern)) & 1;
}

/// Measured syndrome drives a first correction, then the residual is read
/// out perfectly and decoded again.
LogicalFlip terminal_decode(uint8_t x_pattern, uint8_t z_pattern, uint8_t measured_x_type, uint8_t measured_z_type) {
    x_pattern = apply_lookup(x_pattern, measured_z_type);
    z_pattern = apply_lookup(z_pattern, measured_x_type);
    LogicalFlip f;
    f.x = decode_pattern_fails(x_pattern);
    f.z = decode_pattern_fails(z_pattern);
    return f;
}

/// Data qubits (ordered by qubit id) and generator ancillas of every block.
struct BlockMap {
    std::vector<int> blocks;
    std::map<int, std::vector<int>> data;
    std::map<int, std::array<int, kSteaneAncillas>> ancillas;
};

BlockMap block_map(const CliffordCircuit &c) {
    BlockMap m;
    for (std::size_t q = 0; q < c.qubits.size(); q++) {
        const QubitTag &t = c.qubits[q];
        if (t.block < 0) {
            continue;
        }
        if (!m.data.count(t.block)) {
            m.blocks.push_back(t.block);
            m.ancillas[t.block].fill(-1);
        }
        if (t.ancilla < 0) {
            m.data[t.block].push_back(static_cast<int>(q));
        } else {
            m.ancillas[t.block][t.ancilla] = static_cast<int>(q);
        }
    }
    std::sort(m.blocks.begin(), m.blocks.end());
    for (int b : m.blocks) {
        if (m.data[b].size() != kSteaneN) {
            throw std::invalid_argument("block " + std::to_string(b) + " does not have 7 data qubits");
        }
    }
    return m;
}

void check_probability(double p, const char *what) {
    if (!(p >= 0 && p <= 1)) {
        throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

void CliffordCircuit::validate() const {
    int n = static_cast<int>(qubits.size());
    for (const Gate &g : gates) {
        if (g.q0 < 0 || g.q0 >= n) {
            throw std::out_of_range("gate qubit out of range");
        }
        if (g.kind == GateKind::CNOT) {
            if (g.q1 < 0 || g.q1 >= n || g.q1 == g.q0) {
                throw std::out_of_range("CNOT target invalid");
            }
        }
        bool prep_or_meas = g.kind != GateKind::H && g.kind != GateKind::CNOT;
        if (prep_or_meas && qubits[g.q0].ancilla < 0) {
            throw std::invalid_argument("preparation or measurement on a data qubit");
        }
    }
}

bool PauliFrame::apply(const Gate &g) {
    switch (g.kind) {
        case GateKind::H:
            std::swap(x_[g.q0], z_[g.q0]);
            return false;
        case GateKind::CNOT:
            x_[g.q1] ^= x_[g.q0];
            z_[g.q0] ^= z_[g.q1];
            return false;
        case GateKind::PREP_Z:
        case GateKind::PREP_X:
            x_[g.q0] = 0;
            z_[g.q0] = 0;
            return false;
        case GateKind::MEAS_Z:
            return x_[g.q0];
        case GateKind::MEAS_X:
            return z_[g.q0];
    }
    return false;
}

bool generator_covers(int g, int j) {
    return ((j + 1) >> (2 - g)) & 1;
}

int data_qubit(int block, int j) {
    return block * kSteaneN + j;
}

int ancilla_qubit(int block, int s) {
    return kMachineDataQubits + block * kSteaneAncillas + s;
}

Syndrome syndrome(const PauliFrame &frame, int block) {
    uint8_t xp = 0;
    uint8_t zp = 0;
    for (int j = 0; j < kSteaneN; j++) {
        xp |= static_cast<uint8_t>(frame.x(data_qubit(block, j)) << j);
        zp |= static_cast<uint8_t>(frame.z(data_qubit(block, j)) << j);
    }
    return Syndrome{hamming_syndrome(zp), hamming_syndrome(xp)};
}

int lookup_correction(uint8_t syn) {
    if (syn > 7) {
        throw std::out_of_range("syndrome has more than three bits");
    }
    return static_cast<int>(syn) - 1;
}

LogicalFlip lookup_decode(PauliFrame &frame, int block) {
    Syndrome s = syndrome(frame, block);
    int cx = lookup_correction(s.z_type);
    int cz = lookup_correction(s.x_type);
    if (cx >= 0) {
        frame.apply_pauli(data_qubit(block, cx), true, false);
    }
    if (cz >= 0) {
        frame.apply_pauli(data_qubit(block, cz), false, true);
    }
    LogicalFlip f;
    for (int j = 0; j < kSteaneN; j++) {
        f.x ^= frame.x(data_qubit(block, j));
        f.z ^= frame.z(data_qubit(block, j));
    }
    return f;
}

bool decode_pattern_fails(uint8_t pattern) {
    return parity7(apply_lookup(pattern, hamming_syndrome(pattern)));
}

// ---------------------------------------------------------------------------

const char *scheme_name(Scheme s) {
    return s == Scheme::kLocal ? "LQEC" : "DQEC";
}

SteaneMachine steane_machine(Scheme scheme) {
    SteaneMachine m{scheme, std::vector<QubitTag>(kMachineQubits),
                    Allocation(kMachineBlocks, kSteaneN, kMachineBlocks, kSteaneN)};
    for (int b = 0; b < kMachineBlocks; b++) {
        for (int j = 0; j < kSteaneN; j++) {
            int p = scheme == Scheme::kLocal ? b : j;
            m.tags[data_qubit(b, j)] = QubitTag{b, -1, p};
            m.data_allocation.set(b, j, p);
        }
        for (int s = 0; s < kSteaneAncillas; s++) {
            int p = scheme == Scheme::kLocal ? b : (b + s + 1) % kMachineBlocks;
            m.tags[ancilla_qubit(b, s)] = QubitTag{b, s, p};
        }
    }
    return m;
}

std::vector<LogicalOp> ghz_mirror_logical(int n_blocks, int depth) {
    if (n_blocks < 2) {
        throw std::invalid_argument("mirror circuit needs at least two blocks");
    }
    if (depth < 1) {
        throw std::invalid_argument("depth must be at least 1");
    }
    int chain = n_blocks - 1;
    std::vector<LogicalOp> ops;
    auto segment = [&](int len) {
        ops.push_back(LogicalOp{false, 0, 0});
        for (int i = 0; i < len; i++) {
            ops.push_back(LogicalOp{true, i, i + 1});
        }
        for (int i = len; i-- > 0;) {
            ops.push_back(LogicalOp{true, i, i + 1});
        }
        ops.push_back(LogicalOp{false, 0, 0});
    };
    int remaining = depth;
    while (remaining >= 2 * chain) {
        segment(chain);
        remaining -= 2 * chain;
    }
    if (remaining >= 2) {
        segment(remaining / 2);
    }
    if (remaining % 2 == 1) {
        ops.push_back(LogicalOp{true, 0, 1});
    }
    return ops;
}

CliffordCircuit build_ghz_mirror(const SteaneMachine &machine, int depth) {
    CliffordCircuit c;
    c.qubits = machine.tags;
    for (const LogicalOp &op : ghz_mirror_logical(kMachineBlocks, depth)) {
        for (int j = 0; j < kSteaneN; j++) {
            if (op.cnot) {
                c.gates.push_back(Gate{GateKind::CNOT, data_qubit(op.a, j), data_qubit(op.b, j)});
            } else {
                c.gates.push_back(Gate{GateKind::H, data_qubit(op.a, j)});
            }
        }
    }
    return c;
}

void append_syndrome_extraction(CliffordCircuit &c, int block) {
    for (int s = 0; s < kSteaneAncillas; s++) {
        int anc = ancilla_qubit(block, s);
        int g = s % 3;
        bool x_type = s < 3;
        c.gates.push_back(Gate{x_type ? GateKind::PREP_X : GateKind::PREP_Z, anc});
        for (int j = 0; j < kSteaneN; j++) {
            if (!generator_covers(g, j)) {
                continue;
            }
            int d = data_qubit(block, j);
            c.gates.push_back(x_type ? Gate{GateKind::CNOT, anc, d} : Gate{GateKind::CNOT, d, anc});
        }
        c.gates.push_back(Gate{x_type ? GateKind::MEAS_X : GateKind::MEAS_Z, anc});
    }
}

CliffordCircuit syndrome_extraction_circuit(const SteaneMachine &machine, int block) {
    CliffordCircuit c;
    c.qubits = machine.tags;
    append_syndrome_extraction(c, block);
    return c;
}

CliffordCircuit build_experiment_circuit(const SteaneMachine &machine, int depth) {
    CliffordCircuit c = build_ghz_mirror(machine, depth);
    for (int b = 0; b < kMachineBlocks; b++) {
        append_syndrome_extraction(c, b);
    }
    c.validate();
    return c;
}

GateCensus census(const CliffordCircuit &c) {
    GateCensus r;
    for (const Gate &g : c.gates) {
        if (g.kind != GateKind::CNOT) {
            continue;
        }
        if (c.qubits[g.q0].processor == c.qubits[g.q1].processor) {
            r.local++;
        } else {
            r.remote++;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

void NoiseSpec::validate() const {
    check_probability(p_local, "p_local");
    check_probability(p_remote, "p_remote");
}

NoiseLocations noise_locations(const CliffordCircuit &c) {
    NoiseLocations locs;
    for (std::size_t i = 0; i < c.gates.size(); i++) {
        const Gate &g = c.gates[i];
        if (g.kind != GateKind::CNOT) {
            continue;
        }
        if (c.qubits[g.q0].processor == c.qubits[g.q1].processor) {
            locs.local.push_back(i);
        } else {
            locs.remote.push_back(i);
        }
    }
    return locs;
}

std::vector<Fault> sample_faults(const NoiseLocations &locs, const NoiseSpec &noise, Rng &rng) {
    std::vector<Fault> faults;
    auto visit = [&](const std::vector<std::size_t> &list, double p) {
        uint64_t n = list.size();
        uint64_t pos = geometric_skip(rng, p);
        while (pos < n) {
            faults.push_back(Fault{list[pos], static_cast<uint8_t>(1 + uniform_below(rng, 15))});
            uint64_t skip = geometric_skip(rng, p);
            if (skip >= n - pos - 1) {
                break;
            }
            pos += skip + 1;
        }
    };
    visit(locs.local, noise.p_local);
    visit(locs.remote, noise.p_remote);
    std::sort(faults.begin(), faults.end(), [](const Fault &a, const Fault &b) { return a.gate < b.gate; });
    return faults;
}

bool TrialResult::success() const {
    return std::none_of(blocks.begin(), blocks.end(), [](const LogicalFlip &f) { return f.x; });
}

TrialResult run_circuit_trial(const CliffordCircuit &circuit, std::span<const Fault> faults) {
    BlockMap bm = block_map(circuit);
    PauliFrame frame(circuit.num_qubits());
    std::vector<int8_t> meas(circuit.num_qubits(), -1);
    std::size_t next = 0;
    for (std::size_t i = 0; i < circuit.gates.size(); i++) {
        const Gate &g = circuit.gates[i];
        bool flip = frame.apply(g);
        if (g.kind == GateKind::MEAS_X || g.kind == GateKind::MEAS_Z) {
            meas[g.q0] = flip;
        }
        while (next < faults.size() && faults[next].gate == i) {
            uint8_t p = faults[next].pauli;
            if (g.kind != GateKind::CNOT) {
                throw std::invalid_argument("fault attached to a non two-qubit gate");
            }
            frame.apply_pauli(g.q0, p & 1, p & 2);
            frame.apply_pauli(g.q1, p & 4, p & 8);
            next++;
        }
    }
    TrialResult r;
    for (int b : bm.blocks) {
        uint8_t xp = 0;
        uint8_t zp = 0;
        const auto &data = bm.data[b];
        for (int j = 0; j < kSteaneN; j++) {
            xp |= static_cast<uint8_t>(frame.x(data[j]) << j);
            zp |= static_cast<uint8_t>(frame.z(data[j]) << j);
        }
        uint8_t mx = 0;
        uint8_t mz = 0;
        for (int s = 0; s < kSteaneAncillas; s++) {
            int q = bm.ancillas[b][s];
            if (q >= 0 && meas[q] > 0) {
                (s < 3 ? mx : mz) |= static_cast<uint8_t>(1U << (2 - s % 3));
            }
        }
        r.blocks.push_back(terminal_decode(xp, zp, mx, mz));
    }
    return r;
}

TrialResult run_circuit_trial(const CliffordCircuit &circuit, const NoiseSpec &noise, uint64_t seed) {
    noise.validate();
    Rng rng(seed);
    auto faults = sample_faults(noise_locations(circuit), noise, rng);
    return run_circuit_trial(circuit, faults);
}

// ---------------------------------------------------------------------------

FastSampler::FastSampler(const CliffordCircuit &circuit) : locs_(noise_locations(circuit)) {
    circuit.validate();
    BlockMap bm = block_map(circuit);
    blocks_ = bm.blocks;
    std::size_t nb = blocks_.size();
    if (nb * (2 * kSteaneN + kSteaneAncillas) > 192) {
        throw std::invalid_argument("fast sampler supports at most 9 blocks");
    }
    // Bit layout: x of data (block slot, j), then z of data, then outcomes.
    std::vector<int> bit_x(circuit.num_qubits(), -1);
    std::vector<int> bit_z(circuit.num_qubits(), -1);
    std::vector<int> bit_m(circuit.num_qubits(), -1);
    meas_bit_.assign(nb, {-1, -1, -1, -1, -1, -1});
    int z_base = static_cast<int>(nb) * kSteaneN;
    int m_base = 2 * z_base;
    for (std::size_t bi = 0; bi < nb; bi++) {
        int b = blocks_[bi];
        for (int j = 0; j < kSteaneN; j++) {
            int q = bm.data[b][j];
            bit_x[q] = static_cast<int>(bi) * kSteaneN + j;
            bit_z[q] = z_base + static_cast<int>(bi) * kSteaneN + j;
        }
        for (int s = 0; s < kSteaneAncillas; s++) {
            int q = bm.ancillas[b][s];
            if (q >= 0) {
                bit_m[q] = m_base + static_cast<int>(bi) * kSteaneAncillas + s;
                meas_bit_[bi][s] = bit_m[q];
            }
        }
    }
    auto set_bit = [](Bits &bits, int k) { bits[k / 64] |= uint64_t{1} << (k % 64); };

    effect_slot_.assign(circuit.gates.size(), std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> all(locs_.local);
    all.insert(all.end(), locs_.remote.begin(), locs_.remote.end());
    std::sort(all.begin(), all.end());
    effect_.resize(all.size());
    for (std::size_t slot = 0; slot < all.size(); slot++) {
        std::size_t gi = all[slot];
        effect_slot_[gi] = slot;
        const Gate &g0 = circuit.gates[gi];
        // Single-bit components: 1 = X q0, 2 = Z q0, 4 = X q1, 8 = Z q1.
        std::array<Bits, 4> comp{};
        for (int c = 0; c < 4; c++) {
            PauliFrame f(circuit.num_qubits());
            int q = c < 2 ? g0.q0 : g0.q1;
            f.apply_pauli(q, c % 2 == 0, c % 2 == 1);
            std::vector<int8_t> meas(circuit.num_qubits(), -1);
            for (std::size_t i = gi + 1; i < circuit.gates.size(); i++) {
                const Gate &g = circuit.gates[i];
                bool flip = f.apply(g);
                if (g.kind == GateKind::MEAS_X || g.kind == GateKind::MEAS_Z) {
                    meas[g.q0] = flip;
                }
            }
            Bits bits{};
            for (std::size_t qq = 0; qq < circuit.num_qubits(); qq++) {
                int qi = static_cast<int>(qq);
                if (bit_x[qq] >= 0 && f.x(qi)) {
                    set_bit(bits, bit_x[qq]);
                }
                if (bit_z[qq] >= 0 && f.z(qi)) {
                    set_bit(bits, bit_z[qq]);
                }
                if (bit_m[qq] >= 0 && meas[qq] > 0) {
                    set_bit(bits, bit_m[qq]);
                }
            }
            comp[c] = bits;
        }
        for (int p = 0; p < 16; p++) {
            Bits b{};
            for (int c = 0; c < 4; c++) {
                if ((p >> c) & 1) {
                    for (int w = 0; w < 3; w++) {
                        b[w] ^= comp[c][w];
                    }
                }
            }
            effect_[slot][p] = b;
        }
    }
}

TrialResult FastSampler::run(std::span<const Fault> faults) const {
    Bits acc{};
    for (const Fault &f : faults) {
        std::size_t slot = effect_slot_.at(f.gate);
        if (slot == std::numeric_limits<std::size_t>::max()) {
            throw std::invalid_argument("fault attached to a non two-qubit gate");
        }
        const Bits &e = effect_[slot][f.pauli & 15];
        for (int w = 0; w < 3; w++) {
            acc[w] ^= e[w];
        }
    }
    auto bit = [&](int k) -> unsigned { return (acc[k / 64] >> (k % 64)) & 1; };
    std::size_t nb = blocks_.size();
    int z_base = static_cast<int>(nb) * kSteaneN;
    TrialResult r;
    r.blocks.reserve(nb);
    for (std::size_t bi = 0; bi < nb; bi++) {
        uint8_t xp = 0;
        uint8_t zp = 0;
        for (int j = 0; j < kSteaneN; j++) {
            xp |= static_cast<uint8_t>(bit(static_cast<int>(bi) * kSteaneN + j) << j);
            zp |= static_cast<uint8_t>(bit(z_base + static_cast<int>(bi) * kSteaneN + j) << j);
        }
        uint8_t mx = 0;
        uint8_t mz = 0;
        for (int s = 0; s < kSteaneAncillas; s++) {
            int k = meas_bit_[bi][s];
            if (k >= 0 && bit(k)) {
                (s < 3 ? mx : mz) |= static_cast<uint8_t>(1U << (2 - s % 3));
            }
        }
        r.blocks.push_back(terminal_decode(xp, zp, mx, mz));
    }
    return r;
}

TrialResult FastSampler::run(const NoiseSpec &noise, Rng &rng) const {
    auto faults = sample_faults(locs_, noise, rng);
    return run(faults);
}

// ---------------------------------------------------------------------------

namespace {

/// For every support S of errors, the fraction of its 3^|S| X/Y/Z type
/// assignments that end in a logical failure.
std::array<double, 128> make_failure_table() {
    std::array<double, 128> table{};
    for (unsigned support = 0; support < 128; support++) {
        std::vector<int> sites;
        for (int j = 0; j < kSteaneN; j++) {
            if ((support >> j) & 1) {
                sites.push_back(j);
            }
        }
        int total = 1;
        for (std::size_t k = 0; k < sites.size(); k++) {
            total *= 3;
        }
        int fails = 0;
        for (int code = 0; code < total; code++) {
            uint8_t xp = 0;
            uint8_t zp = 0;
            int c = code;
            for (int j : sites) {
                int type = c % 3;  // 0 = X, 1 = Y, 2 = Z
                c /= 3;
                if (type != 2) {
                    xp |= static_cast<uint8_t>(1U << j);
                }
                if (type != 0) {
                    zp |= static_cast<uint8_t>(1U << j);
                }
            }
            fails += decode_pattern_fails(xp) || decode_pattern_fails(zp);
        }
        table[support] = static_cast<double>(fails) / total;
    }
    return table;
}

const std::array<double, 128> &failure_table() {
    static const std::array<double, 128> table = make_failure_table();
    return table;
}

void check_allocation(const Allocation &alloc, std::span<const double> rates) {
    if (alloc.ell_c() != kSteaneN || !alloc.complete()) {
        throw std::invalid_argument("code capacity needs a complete allocation of 7-qubit blocks");
    }
    if (rates.size() != static_cast<std::size_t>(alloc.n_p())) {
        throw std::invalid_argument("need one rate per processor");
    }
    for (double r : rates) {
        check_probability(r, "processor error rate");
    }
}

}  // namespace

double block_failure_probability(std::span<const double> rates) {
    if (rates.size() != kSteaneN) {
        throw std::invalid_argument("block failure needs seven qubit rates");
    }
    const auto &table = failure_table();
    double total = 0;
    for (unsigned support = 1; support < 128; support++) {
        double w = table[support];
        if (w == 0) {
            continue;
        }
        double pr = w;
        for (int j = 0; j < kSteaneN; j++) {
            pr *= (support >> j) & 1 ? rates[j] : 1 - rates[j];
        }
        total += pr;
    }
    return total;
}

std::vector<double> code_capacity_failure_probabilities(const Allocation &alloc, std::span<const double> rates) {
    check_allocation(alloc, rates);
    std::vector<double> out;
    std::array<double, kSteaneN> r{};
    for (int b = 0; b < alloc.n_blocks(); b++) {
        for (int j = 0; j < kSteaneN; j++) {
            r[j] = rates[alloc.processor(b, j)];
        }
        out.push_back(block_failure_probability(r));
    }
    return out;
}

std::vector<bool> code_capacity_trial(const Allocation &alloc, std::span<const double> rates, Rng &rng) {
    check_allocation(alloc, rates);
    std::vector<bool> ok;
    for (int b = 0; b < alloc.n_blocks(); b++) {
        uint8_t xp = 0;
        uint8_t zp = 0;
        for (int j = 0; j < kSteaneN; j++) {
            if (uniform01(rng) < rates[alloc.processor(b, j)]) {
                uint64_t type = uniform_below(rng, 3);
                if (type != 2) {
                    xp |= static_cast<uint8_t>(1U << j);
                }
                if (type != 0) {
                    zp |= static_cast<uint8_t>(1U << j);
                }
            }
        }
        ok.push_back(!decode_pattern_fails(xp) && !decode_pattern_fails(zp));
    }
    return ok;
}

std::vector<bool> code_capacity_trial(const Allocation &alloc, std::span<const double> rates, uint64_t seed) {
    Rng rng(seed);
    return code_capacity_trial(alloc, rates, rng);
}

bool correctable(int n_e, int n_pauli, int d) {
    if (n_e < 0 || n_pauli < 0 || d < 0) {
        throw std::invalid_argument("correctable expects nonnegative integers");
    }
    return n_e + 2 * n_pauli <= d - 1;
}

}  // namespace daqec
