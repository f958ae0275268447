// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace daqec {

/// The engine used by every stochastic routine in the project.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to turn (seed, stream, counter) triples into
/// well-mixed engine seeds.
uint64_t splitmix64(uint64_t x);

/// Counter-based split of a master seed: the generator for work item
/// `counter` of logical stream `stream` is seeded with
/// splitmix64(splitmix64(master ^ splitmix64(stream)) + counter).
/// Distinct (stream, counter) pairs give independent-looking streams and the
/// result never depends on which thread runs the item.
uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t counter);

Rng make_rng(uint64_t master, uint64_t stream, uint64_t counter);

// The distributions below are implemented locally instead of using
// <random>'s, whose output is implementation-defined. Results are therefore
// identical across standard libraries.

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng &rng);

/// Uniform integer in [0, n). Requires n > 0.
uint64_t uniform_below(Rng &rng, uint64_t n);

/// Standard normal deviate (Box-Muller, one value per call).
double standard_normal(Rng &rng);

/// Number of failures before the first success of a Bernoulli(p) sequence.
/// Returns UINT64_MAX when p == 0.
uint64_t geometric_skip(Rng &rng, double p);

}  // namespace daqec
