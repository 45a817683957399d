#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace motifcnn {

std::uint64_t fnv1a(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for a named consumer ("init", "sampler", ...) of one root seed.
std::mt19937_64 substream(std::uint64_t root_seed, std::string_view name);

}  // namespace motifcnn
