// SPDX-License-Identifier: Apache-2.0

#include "daqec/steane.h"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <bit>
#include <cmath>

using namespace daqec;

namespace {

using Mat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

Mat pauli(bool x, bool z) {
    Mat m(2, 2);
    const std::complex<double> i(0, 1);
    if (x && z) {
        m << 0, -i, i, 0;
    } else if (x) {
        m << 0, 1, 1, 0;
    } else if (z) {
        m << 1, 0, 0, -1;
    } else {
        m << 1, 0, 0, 1;
    }
    return m;
}

// Equal up to a global phase.
bool same_pauli(const Mat &a, const Mat &b) {
    return std::abs(std::abs((a.adjoint() * b).trace()) - a.rows()) < 1e-12;
}

// Independent Hamming decoder: syndrome from the parity-check rows, weight-1
// correction, logical flip iff the corrected word has odd weight.
bool oracle_fails(uint8_t pattern) {
    int syn = 0;
    for (int row = 0; row < 3; row++) {
        int parity = 0;
        for (int j = 0; j < 7; j++) {
            parity ^= ((pattern >> j) & 1) & (((j + 1) >> row) & 1);
        }
        syn |= parity << row;
    }
    if (syn) {
        pattern ^= static_cast<uint8_t>(1 << (syn - 1));
    }
    return std::popcount(static_cast<unsigned>(pattern)) & 1;
}

// Sums over all 4^7 Pauli errors.
double oracle_block_failure(const std::vector<double> &rates) {
    double total = 0;
    for (int e = 0; e < (1 << 14); e++) {
        uint8_t xp = 0, zp = 0;
        double pr = 1;
        for (int j = 0; j < 7; j++) {
            int p = (e >> (2 * j)) & 3;  // 0 I, 1 X, 2 Y, 3 Z
            pr *= p == 0 ? 1 - rates[j] : rates[j] / 3;
            xp |= static_cast<uint8_t>((p == 1 || p == 2) << j);
            zp |= static_cast<uint8_t>((p == 2 || p == 3) << j);
        }
        if (oracle_fails(xp) || oracle_fails(zp)) {
            total += pr;
        }
    }
    return total;
}

// Runs the gates on a frame and returns each ancilla's measurement flip.
std::vector<int> measured_flips(const CliffordCircuit &c, PauliFrame &frame) {
    std::vector<int> flips(c.num_qubits(), -1);
    for (const Gate &g : c.gates) {
        bool f = frame.apply(g);
        if (g.kind == GateKind::MEAS_X || g.kind == GateKind::MEAS_Z) {
            flips[g.q0] = f;
        }
    }
    return flips;
}

}  // namespace

TEST(frame, conjugation_matches_dense_simulation) {
    Mat h(2, 2);
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    Mat cnot = Mat::Zero(4, 4);
    cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1;
    for (int p = 0; p < 16; p++) {
        bool x0 = p & 1, z0 = p & 2, x1 = p & 4, z1 = p & 8;
        Mat in = Eigen::kroneckerProduct(pauli(x0, z0), pauli(x1, z1)).eval();
        PauliFrame f(2);
        f.apply_pauli(0, x0, z0);
        f.apply_pauli(1, x1, z1);
        f.apply(Gate{GateKind::CNOT, 0, 1});
        Mat out = Eigen::kroneckerProduct(pauli(f.x(0), f.z(0)), pauli(f.x(1), f.z(1))).eval();
        EXPECT_TRUE(same_pauli(cnot * in * cnot.adjoint(), out)) << p;
    }
    for (int p = 0; p < 4; p++) {
        PauliFrame f(1);
        f.apply_pauli(0, p & 1, p & 2);
        f.apply(Gate{GateKind::H, 0});
        EXPECT_TRUE(same_pauli(h * pauli(p & 1, p & 2) * h, pauli(f.x(0), f.z(0))));
    }
    PauliFrame f(1);
    f.apply_pauli(0, true, false);
    EXPECT_TRUE(f.apply(Gate{GateKind::MEAS_Z, 0}));
    EXPECT_FALSE(f.apply(Gate{GateKind::MEAS_X, 0}));
    f.apply(Gate{GateKind::PREP_X, 0});
    EXPECT_FALSE(f.x(0));
}

TEST(block, syndromes_and_decoder) {
    for (int j = 0; j < 7; j++) {
        PauliFrame f(kMachineQubits);
        f.apply_pauli(data_qubit(2, j), true, false);
        Syndrome s = syndrome(f, 2);
        EXPECT_EQ(s.z_type, j + 1);
        EXPECT_EQ(s.x_type, 0);
        EXPECT_EQ(lookup_correction(s.z_type), j);
        LogicalFlip lf = lookup_decode(f, 2);
        EXPECT_FALSE(lf.x);
        EXPECT_FALSE(lf.z);
        EXPECT_FALSE(f.x(data_qubit(2, j)));
    }
    PauliFrame y(kMachineQubits);
    y.apply_pauli(data_qubit(0, 4), true, true);
    EXPECT_EQ(syndrome(y, 0).x_type, 5);
    EXPECT_EQ(syndrome(y, 0).z_type, 5);
    EXPECT_EQ(lookup_correction(0), -1);

    for (int syn = 0; syn < 64; syn++) {
        PauliFrame f(kMachineQubits);
        // Build a weight <= 2 error with the requested syndromes.
        int sx = syn & 7, sz = syn >> 3;
        if (sz) {
            f.apply_pauli(data_qubit(1, sz - 1), true, false);
        }
        if (sx) {
            f.apply_pauli(data_qubit(1, sx - 1), false, true);
        }
        EXPECT_EQ(syndrome(f, 1).x_type, sx);
        EXPECT_EQ(syndrome(f, 1).z_type, sz);
        lookup_decode(f, 1);
        EXPECT_EQ(syndrome(f, 1).x_type, 0);
        EXPECT_EQ(syndrome(f, 1).z_type, 0);
    }
    for (int pattern = 0; pattern < 128; pattern++) {
        EXPECT_EQ(decode_pattern_fails(static_cast<uint8_t>(pattern)), oracle_fails(static_cast<uint8_t>(pattern)))
            << pattern;
    }
    for (int j = 0; j < 7; j++) {
        EXPECT_TRUE(generator_covers(0, j) == (j >= 3));
    }
}

TEST(machine, layout_and_extraction_census) {
    SteaneMachine local = steane_machine(Scheme::kLocal);
    SteaneMachine dist = steane_machine(Scheme::kDistributed);
    EXPECT_EQ(local.tags.size(), static_cast<std::size_t>(kMachineQubits));
    for (int b = 0; b < kMachineBlocks; b++) {
        CliffordCircuit l = syndrome_extraction_circuit(local, b);
        l.validate();
        EXPECT_EQ(census(l).remote, 0u);
        EXPECT_EQ(census(l).local, 24u);

        CliffordCircuit d = syndrome_extraction_circuit(dist, b);
        std::vector<int> remote(6, 0);
        for (const Gate &g : d.gates) {
            if (g.kind == GateKind::CNOT && d.qubits[g.q0].processor != d.qubits[g.q1].processor) {
                int anc = d.qubits[g.q0].ancilla >= 0 ? g.q0 : g.q1;
                remote[d.qubits[anc].ancilla]++;
            }
        }
        for (int s = 0; s < 6; s++) {
            EXPECT_GE(remote[s], 3);
        }
    }
    for (int p = 0; p < 7; p++) {
        int count = 0;
        for (const QubitTag &t : dist.tags) {
            count += t.processor == p;
        }
        EXPECT_EQ(count, 13);
    }
}

TEST(machine, measured_syndrome_matches_injected_error) {
    SteaneMachine m = steane_machine(Scheme::kDistributed);
    CliffordCircuit c = syndrome_extraction_circuit(m, 3);
    for (int j = 0; j < 7; j++) {
        for (int type = 1; type <= 3; type++) {
            PauliFrame f(c.num_qubits());
            f.apply_pauli(data_qubit(3, j), type & 1, type & 2);
            Syndrome expect = syndrome(f, 3);
            std::vector<int> flips = measured_flips(c, f);
            uint8_t sx = 0, sz = 0;
            for (int s = 0; s < 6; s++) {
                int bit = flips[ancilla_qubit(3, s)];
                ASSERT_GE(bit, 0);
                (s < 3 ? sx : sz) |= static_cast<uint8_t>(bit << (2 - s % 3));
            }
            EXPECT_EQ(sx, expect.x_type);
            EXPECT_EQ(sz, expect.z_type);
            // Extraction does not disturb the data.
            EXPECT_EQ(syndrome(f, 3).x_type, expect.x_type);
            EXPECT_EQ(syndrome(f, 3).z_type, expect.z_type);
        }
    }
}

TEST(ghz, logical_program_and_census) {
    for (int depth : {1, 2, 5, 12, 13, 24, 52}) {
        auto ops = ghz_mirror_logical(7, depth);
        int cnots = 0;
        for (const auto &op : ops) {
            cnots += op.cnot;
        }
        EXPECT_EQ(cnots, depth);

        for (Scheme s : {Scheme::kLocal, Scheme::kDistributed}) {
            SteaneMachine m = steane_machine(s);
            CliffordCircuit c = build_ghz_mirror(m, depth);
            std::size_t expect_remote = 0;
            for (const auto &op : ops) {
                if (op.cnot) {
                    expect_remote += transversal_remote_count(m.data_allocation, op.a, op.b);
                }
            }
            GateCensus g = census(c);
            EXPECT_EQ(g.remote, expect_remote);
            EXPECT_EQ(g.local + g.remote, 7u * depth);
            if (s == Scheme::kLocal) {
                EXPECT_EQ(g.remote, 7u * depth);
            } else {
                EXPECT_EQ(g.remote, 0u);
            }
        }
    }
}

TEST(trials, zero_noise_always_succeeds) {
    for (Scheme s : {Scheme::kLocal, Scheme::kDistributed}) {
        CliffordCircuit c = build_experiment_circuit(steane_machine(s), 23);
        FastSampler fs(c);
        Rng rng(5);
        for (int t = 0; t < 10000; t++) {
            ASSERT_TRUE(fs.run(NoiseSpec{0, 0}, rng).success());
        }
        TrialResult direct = run_circuit_trial(c, NoiseSpec{0, 0}, 11);
        EXPECT_TRUE(direct.success());
        EXPECT_EQ(direct.blocks.size(), 7u);
    }
}

TEST(trials, fast_sampler_matches_direct_engine) {
    for (Scheme s : {Scheme::kLocal, Scheme::kDistributed}) {
        CliffordCircuit c = build_experiment_circuit(steane_machine(s), 10);
        FastSampler fs(c);
        Rng rng(77);
        NoiseSpec noise{0.01, 0.03};
        int failures = 0;
        for (int t = 0; t < 2000; t++) {
            std::vector<Fault> faults = sample_faults(fs.locations(), noise, rng);
            TrialResult a = run_circuit_trial(c, faults);
            TrialResult b = fs.run(faults);
            ASSERT_EQ(a.blocks.size(), b.blocks.size());
            for (std::size_t i = 0; i < a.blocks.size(); i++) {
                ASSERT_EQ(a.blocks[i].x, b.blocks[i].x);
                ASSERT_EQ(a.blocks[i].z, b.blocks[i].z);
            }
            failures += !a.success();
        }
        EXPECT_GT(failures, 0);
    }
}

TEST(trials, single_fault_is_corrected) {
    SteaneMachine m = steane_machine(Scheme::kLocal);
    CliffordCircuit c = build_experiment_circuit(m, 2);
    std::size_t mirror_gates = build_ghz_mirror(m, 2).gates.size();
    FastSampler fs(c);
    // Any single fault on the mirror part touches at most one qubit per block.
    for (std::size_t gate = 0; gate < mirror_gates; gate++) {
        if (c.gates[gate].kind != GateKind::CNOT) {
            continue;
        }
        for (uint8_t p = 1; p < 16; p++) {
            Fault f{gate, p};
            ASSERT_TRUE(fs.run(std::span<const Fault>(&f, 1)).success()) << gate << " " << int(p);
        }
    }
}

TEST(noise, sampling_rate) {
    NoiseLocations locs;
    for (std::size_t i = 0; i < 1000; i++) {
        locs.local.push_back(2 * i);
        locs.remote.push_back(2 * i + 1);
    }
    Rng rng(8);
    double local = 0, remote = 0;
    int reps = 200;
    for (int r = 0; r < reps; r++) {
        for (const Fault &f : sample_faults(locs, NoiseSpec{0.01, 0.1}, rng)) {
            ASSERT_GE(f.pauli, 1);
            ASSERT_LE(f.pauli, 15);
            (f.gate % 2 ? remote : local) += 1;
        }
    }
    EXPECT_NEAR(local / reps, 10, 5 * std::sqrt(10.0 / reps));
    EXPECT_NEAR(remote / reps, 100, 5 * std::sqrt(90.0 / reps));
    EXPECT_THROW((NoiseSpec{-0.1, 0}.validate()), std::exception);
}

TEST(code_capacity, exact_probabilities) {
    Rng rng(21);
    for (int k = 0; k < 5; k++) {
        std::vector<double> r(7);
        for (double &x : r) {
            x = 0.3 * uniform01(rng);
        }
        EXPECT_NEAR(block_failure_probability(r), oracle_block_failure(r), 1e-12);
    }
    EXPECT_EQ(block_failure_probability(std::vector<double>(7, 0.0)), 0);

    std::vector<double> rates{0.01, 0.02, 0.05, 0.1, 0.03, 0.07, 0.2};
    Allocation local = steane_machine(Scheme::kLocal).data_allocation;
    Allocation dist = steane_machine(Scheme::kDistributed).data_allocation;
    std::vector<double> pl = code_capacity_failure_probabilities(local, rates);
    std::vector<double> pd = code_capacity_failure_probabilities(dist, rates);
    double d_fail = oracle_block_failure(rates);
    for (int b = 0; b < 7; b++) {
        EXPECT_NEAR(pl[b], oracle_block_failure(std::vector<double>(7, rates[b])), 1e-12);
        EXPECT_NEAR(pd[b], d_fail, 1e-12);
    }

    int trials = 20000;
    std::vector<int> fails(7, 0);
    for (int t = 0; t < trials; t++) {
        auto ok = code_capacity_trial(local, rates, rng);
        for (int b = 0; b < 7; b++) {
            fails[b] += !ok[b];
        }
    }
    for (int b = 0; b < 7; b++) {
        double sd = std::sqrt(pl[b] * (1 - pl[b]) / trials);
        EXPECT_NEAR(static_cast<double>(fails[b]) / trials, pl[b], 5 * sd + 1e-4);
    }

    std::vector<double> uniform(7, 0.04);
    auto ul = code_capacity_failure_probabilities(local, uniform);
    auto ud = code_capacity_failure_probabilities(dist, uniform);
    for (int b = 0; b < 7; b++) {
        EXPECT_NEAR(ul[b], ud[b], 1e-15);
    }
    for (bool ok : code_capacity_trial(dist, std::vector<double>(7, 0.0), uint64_t{4})) {
        EXPECT_TRUE(ok);
    }
    EXPECT_THROW(code_capacity_failure_probabilities(local, std::vector<double>(6, 0.0)), std::exception);
}

TEST(code_capacity, correctable_examples) {
    EXPECT_TRUE(correctable(0, 1, 3));
    EXPECT_TRUE(correctable(2, 0, 3));
    EXPECT_FALSE(correctable(1, 1, 3));
    EXPECT_TRUE(correctable(3, 1, 6));
    EXPECT_FALSE(correctable(3, 0, 3));
    EXPECT_THROW(correctable(-1, 0, 3), std::exception);
}
