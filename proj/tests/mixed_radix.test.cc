// SPDX-License-Identifier: Apache-2.0

#include "daqec/mixed_radix.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>

#include "daqec/wstate.h"

using namespace daqec;

namespace {

Ket unit(int d, int k) {
    Ket v = Ket::Zero(d);
    v[k] = 1;
    return v;
}

Ket random_ket(int dim, Rng &rng) {
    Ket v(dim);
    for (int i = 0; i < dim; i++) {
        v[i] = Complex(standard_normal(rng), standard_normal(rng));
    }
    return v / v.norm();
}

Operator random_unitary(int dim, Rng &rng) {
    Operator g(dim, dim);
    for (int i = 0; i < dim; i++) {
        for (int j = 0; j < dim; j++) {
            g(i, j) = Complex(standard_normal(rng), standard_normal(rng));
        }
    }
    Eigen::HouseholderQR<Operator> qr(g);
    return qr.householderQ();
}

// Reference gate application: loops over every pair of basis states that
// agree off the target sites.
Ket oracle_apply(const Ket &in, const std::vector<int> &dims, const Operator &u, const std::vector<int> &sites) {
    std::size_t total = in.size();
    auto digits = [&](std::size_t idx) {
        std::vector<int> d(dims.size());
        for (std::size_t s = dims.size(); s-- > 0;) {
            d[s] = static_cast<int>(idx % dims[s]);
            idx /= dims[s];
        }
        return d;
    };
    auto sub = [&](const std::vector<int> &d) {
        std::size_t k = 0;
        for (int s : sites) {
            k = k * dims[s] + d[s];
        }
        return k;
    };
    Ket out = Ket::Zero(total);
    for (std::size_t i = 0; i < total; i++) {
        auto di = digits(i);
        for (std::size_t j = 0; j < total; j++) {
            auto dj = digits(j);
            bool same = true;
            for (std::size_t s = 0; s < dims.size(); s++) {
                bool target = std::find(sites.begin(), sites.end(), static_cast<int>(s)) != sites.end();
                same = same && (target || di[s] == dj[s]);
            }
            if (same) {
                out[i] += u(sub(di), sub(dj)) * in[j];
            }
        }
    }
    return out;
}

}  // namespace

TEST(radix, index_matches_kronecker_product) {
    RadixVector r({3, 2});
    auto s = basis_state(r, {1, 1});
    Ket expected = Eigen::kroneckerProduct(unit(3, 1), unit(2, 1)).eval();
    EXPECT_LT((s.amplitudes() - expected).norm(), 1e-15);
    EXPECT_EQ(r.index_of(std::vector<int>{1, 1}), 3u);
    EXPECT_EQ(r.digits_of(3), (std::vector<int>{1, 1}));
}

TEST(radix, all_bot_state) {
    auto s = basis_state(RadixVector({3, 3, 3}), {2, 2, 2});
    EXPECT_EQ(s.amplitudes()[26], Complex(1, 0));
    EXPECT_NEAR(s.trace(), 1, 1e-15);
}

TEST(radix, rejects_bad_input) {
    EXPECT_THROW(RadixVector(std::vector<int>(23, 2)), std::exception);
    EXPECT_THROW(RadixVector({2, 1}), std::exception);
    EXPECT_THROW(basis_state(RadixVector({2, 2}), {0, 2}), std::exception);
}

TEST(unitary, hadamard_on_zero) {
    auto s = apply_unitary(basis_state(RadixVector({2}), {0}), GateSpec(gates::hadamard(), {2}), {0});
    EXPECT_NEAR(s.amplitudes()[0].real(), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.amplitudes()[1].real(), 1 / std::sqrt(2.0), 1e-15);
}

TEST(unitary, identity_and_involution) {
    Rng rng(3);
    RadixVector r({3, 2});
    auto s = MixedRadixState::pure(r, random_ket(6, rng));
    auto same = apply_unitary(s, GateSpec(gates::identity(3), {3}), {0});
    EXPECT_LT((same.amplitudes() - s.amplitudes()).norm(), 1e-14);
    auto twice = apply_unitary(apply_unitary(s, gate_u02(), {0}), gate_u02(), {0});
    EXPECT_LT((twice.amplitudes() - s.amplitudes()).norm(), 1e-14);
}

TEST(unitary, rejects_mismatch_and_duplicates) {
    auto s = basis_state(RadixVector({2, 3}), {0, 0});
    EXPECT_THROW(apply_unitary(s, GateSpec(gates::hadamard(), {2}), {1}), std::exception);
    EXPECT_THROW(apply_unitary(s, GateSpec(gates::swap(2), {2, 2}), {0, 0}), std::exception);
    Operator bad = Operator::Identity(2, 2);
    bad(0, 0) = 2;
    EXPECT_THROW(GateSpec(bad, {2}), std::exception);
}

TEST(unitary, matches_reference_on_random_circuits) {
    Rng rng(11);
    for (int trial = 0; trial < 100; trial++) {
        int n = 1 + static_cast<int>(uniform_below(rng, 5));
        std::vector<int> dims(n);
        for (int &d : dims) {
            d = 2 + static_cast<int>(uniform_below(rng, 2));
        }
        RadixVector r(dims);
        Ket ket = random_ket(static_cast<int>(r.total_dim()), rng);
        auto state = MixedRadixState::pure(r, ket);
        auto rho = state.as_density();
        for (int g = 0; g < 4; g++) {
            std::vector<int> sites{static_cast<int>(uniform_below(rng, n))};
            if (n > 1 && uniform_below(rng, 2)) {
                int b;
                do {
                    b = static_cast<int>(uniform_below(rng, n));
                } while (b == sites[0]);
                sites.push_back(b);
            }
            std::vector<int> sd;
            int dim = 1;
            for (int s : sites) {
                sd.push_back(dims[s]);
                dim *= dims[s];
            }
            Operator u = random_unitary(dim, rng);
            GateSpec gate(u, sd);
            ket = oracle_apply(ket, dims, u, sites);
            state = apply_unitary(state, gate, sites);
            rho = apply_unitary(rho, gate, sites);
            if (uniform_below(rng, 3) == 0) {
                int s = sites[0];
                rho = apply_channel(rho, depolarizing_channel(dims[s], 1, uniform01(rng)), {s});
            }
            ASSERT_NEAR(state.trace(), 1, 1e-9);
            ASSERT_NEAR(rho.trace(), 1, 1e-9);
        }
        EXPECT_LT((state.amplitudes() - ket).norm(), 1e-9);
    }
}

TEST(unitary, wiring_consistency) {
    Rng rng(5);
    RadixVector r({2, 3, 3});
    auto s = MixedRadixState::pure(r, random_ket(18, rng));
    GateSpec g(random_unitary(6, rng), {2, 3});
    std::vector<int> swap_order{1, 0};
    auto a = apply_unitary(s, g, {0, 1});
    auto b = apply_unitary(s, g.permuted(swap_order), {1, 0});
    EXPECT_LT((a.amplitudes() - b.amplitudes()).norm(), 1e-12);
}

TEST(channel, depolarizing_structure) {
    auto ch = depolarizing_channel(2, 2, 0.3);
    ASSERT_EQ(ch.ops().size(), 16u);
    Operator sum = Operator::Zero(4, 4);
    for (const auto &k : ch.ops()) {
        sum += k.adjoint() * k;
    }
    EXPECT_LT((sum - Operator::Identity(4, 4)).norm(), 1e-12);
    EXPECT_NEAR(std::abs(ch.ops()[0](0, 0)), std::sqrt(0.7), 1e-12);
    EXPECT_NEAR(ch.ops()[1].cwiseAbs().maxCoeff(), std::sqrt(0.3 / 15), 1e-12);

    auto qutrit = depolarizing_channel(3, 1, 0.5);
    EXPECT_EQ(qutrit.ops().size(), 9u);
    EXPECT_EQ(depolarizing_channel(2, 1, 0).ops().size(), 1u);
    EXPECT_THROW(depolarizing_channel(2, 1, 1.5), std::exception);
}

TEST(channel, depolarizing_action) {
    auto zero = basis_state(RadixVector({2, 2}), {0, 0});
    auto same = apply_channel(zero, depolarizing_channel(2, 2, 0), {0, 1});
    EXPECT_LT((same.density_matrix() - zero.to_density_matrix()).norm(), 1e-12);

    // With weight p spread over the 15 nontrivial Paulis, p = 15/16 is full
    // replacement by the maximally mixed state.
    auto mixed = apply_channel(zero, depolarizing_channel(2, 2, 15.0 / 16), {0, 1});
    EXPECT_LT((mixed.density_matrix() - Operator::Identity(4, 4) / 4).norm(), 1e-12);

    double p = 0.2;
    auto one = apply_channel(basis_state(RadixVector({2}), {0}), depolarizing_channel(2, 1, p), {0});
    // (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on |0><0|.
    EXPECT_NEAR(one.density_matrix()(0, 0).real(), 1 - 2 * p / 3, 1e-12);
    EXPECT_NEAR(one.density_matrix()(1, 1).real(), 2 * p / 3, 1e-12);

    auto plus = apply_unitary(basis_state(RadixVector({2}), {0}), GateSpec(gates::hadamard(), {2}), {0});
    auto plus_mixed = apply_channel(plus, depolarizing_channel(2, 1, 0.75), {0});
    EXPECT_LT((plus_mixed.density_matrix() - Operator::Identity(2, 2) / 2).norm(), 1e-12);
}

TEST(channel, rejects_non_cptp) {
    std::vector<Operator> ops{Operator::Identity(2, 2), Operator::Identity(2, 2)};
    EXPECT_THROW(KrausChannel(ops, {2}), std::exception);
}

TEST(measure, basis_and_plus) {
    std::vector<int> site{0};
    auto b = enumerate_measurement(basis_state(RadixVector({2}), {0}), site);
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b[0].outcome[0], 0);
    EXPECT_NEAR(b[0].probability, 1, 1e-15);

    auto plus = apply_unitary(basis_state(RadixVector({2}), {0}), GateSpec(gates::hadamard(), {2}), {0});
    auto pb = enumerate_measurement(plus, site);
    ASSERT_EQ(pb.size(), 2u);
    EXPECT_NEAR(pb[0].probability, 0.5, 1e-12);
    EXPECT_NEAR(pb[1].probability, 0.5, 1e-12);
}

TEST(measure, sampling_matches_enumeration) {
    Rng rng(21);
    RadixVector r({3, 2});
    auto s = MixedRadixState::pure(r, random_ket(6, rng));
    std::vector<int> sites{0};
    auto branches = enumerate_measurement(s, sites);
    double total = 0;
    for (const auto &b : branches) {
        total += b.probability;
    }
    EXPECT_NEAR(total, 1, 1e-9);
    const int draws = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < draws; i++) {
        counts[sample_measurement(s, sites, rng).outcome[0]]++;
    }
    for (const auto &b : branches) {
        double p = b.probability;
        double sigma = std::sqrt(p * (1 - p) / draws);
        EXPECT_NEAR(counts[b.outcome[0]] / static_cast<double>(draws), p, 4 * sigma + 1e-12);
    }
}

TEST(partial_trace, bell_and_product) {
    RadixVector r({2, 2});
    Ket bell = Ket::Zero(4);
    bell[0] = bell[3] = 1 / std::sqrt(2.0);
    auto red = partial_trace(MixedRadixState::pure(r, bell), {0});
    EXPECT_LT((red.density_matrix() - Operator::Identity(2, 2) / 2).norm(), 1e-12);

    Rng rng(2);
    Ket a = random_ket(3, rng);
    Ket b = random_ket(2, rng);
    Ket prod = Eigen::kroneckerProduct(a, b).eval();
    auto fa = partial_trace(MixedRadixState::pure(RadixVector({3, 2}), prod), {0});
    EXPECT_LT((fa.density_matrix() - a * a.adjoint()).norm(), 1e-12);
    EXPECT_THROW(partial_trace(MixedRadixState::pure(r, bell), std::vector<int>{}), std::exception);
}

TEST(partial_trace, three_site_codeword_family) {
    Rng rng(8);
    for (int trial = 0; trial < 10; trial++) {
        Ket psi = random_ket(2, rng);
        Ket psi3 = Ket::Zero(3);
        psi3.head(2) = psi;
        // (1/sqrt 3)(|psi 2 2> + |2 psi 2> + |2 2 psi>)
        Ket bot = unit(3, 2);
        Ket cw = (Eigen::kroneckerProduct(Eigen::kroneckerProduct(psi3, bot).eval(), bot).eval() +
                  Eigen::kroneckerProduct(Eigen::kroneckerProduct(bot, psi3).eval(), bot).eval() +
                  Eigen::kroneckerProduct(Eigen::kroneckerProduct(bot, bot).eval(), psi3).eval()) /
                 std::sqrt(3.0);
        auto rho = partial_trace(MixedRadixState::pure(RadixVector({3, 3, 3}), cw), {1, 2});
        Ket beta = (Eigen::kroneckerProduct(psi3, bot).eval() + Eigen::kroneckerProduct(bot, psi3).eval()) /
                   std::sqrt(2.0);
        Ket bb = Eigen::kroneckerProduct(bot, bot).eval();
        Operator expected = bb * bb.adjoint() / 3.0 + beta * beta.adjoint() * (2.0 / 3.0);
        EXPECT_LT((rho.density_matrix() - expected).norm(), 1e-9);
        EXPECT_NEAR(rho.trace(), 1, 1e-12);
        EXPECT_NEAR(fidelity(rho, MixedRadixState::pure(RadixVector({3, 3}), beta)), 2.0 / 3, 1e-9);
    }
}

TEST(fidelity, self_and_orthogonal) {
    RadixVector r({3});
    EXPECT_NEAR(fidelity(basis_state(r, {1}), basis_state(r, {1})), 1, 1e-15);
    EXPECT_NEAR(fidelity(basis_state(r, {1}), basis_state(r, {2})), 0, 1e-15);
    EXPECT_THROW(fidelity(basis_state(r, {1}), basis_state(RadixVector({2}), {0})), std::exception);
}

TEST(ensemble, round_trip) {
    Rng rng(4);
    RadixVector r({3, 2});
    Ket a = random_ket(6, rng);
    Ket b = random_ket(6, rng);
    Operator rho = 0.3 * a * a.adjoint() + 0.7 * b * b.adjoint();
    auto s = MixedRadixState::density(r, rho);
    auto comps = to_ensemble(s);
    auto back = from_ensemble(r, comps);
    EXPECT_LT((back.to_density_matrix() - rho).norm(), 1e-10);
    ASSERT_GE(comps.size(), 2u);
    EXPECT_GE(comps[0].weight, comps[1].weight);

    auto pure = MixedRadixState::pure(r, a);
    auto again = from_ensemble(r, to_ensemble(pure));
    EXPECT_TRUE(again.is_pure());
    EXPECT_NEAR(fidelity(again, pure), 1, 1e-12);
}

TEST(state, validation) {
    RadixVector r({2});
    Ket bad = Ket::Ones(2);
    EXPECT_THROW(MixedRadixState::pure(r, bad), std::exception);
    Operator nh = Operator::Zero(2, 2);
    nh(0, 0) = 1;
    nh(0, 1) = 0.5;
    EXPECT_THROW(MixedRadixState::density(r, nh), std::exception);
}

TEST(state, dump_format) {
    auto plus = apply_unitary(basis_state(RadixVector({3, 2}), {2, 0}), GateSpec(gates::hadamard(), {2}), {1});
    std::istringstream in(plus.dump());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0].substr(0, 5), "4\t20\t");
    EXPECT_EQ(lines[1].substr(0, 5), "5\t21\t");
}
