#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mrpleio {

using Engine = std::mt19937_64;

/// Engine for an independent substream identified by (seed, keys...).
/// Streams depend only on their keys, never on the order in which they are
/// created, so replicates reproduce regardless of scheduling.
Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// Uniform random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> random_permutation(std::size_t n, Engine& engine);

}  // namespace mrpleio
