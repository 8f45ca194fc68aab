#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace adem {

using Rng = std::mt19937_64;

/// Independent seed for a named sub-stream ("init", "noise", ...) of a run seed.
/// The same (seed, stream) pair always yields the same value.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
double uniform01(Rng& rng);

}  // namespace adem
