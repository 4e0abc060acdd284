#pragma once

#include <cstdint>
#include <random>

namespace trendlab {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// (root seed, stream id) pair so that parallel work never shares an engine.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of child stream `stream` under `parent`. The derivation tree is
/// root -> command -> path/resample/trial, each level one call.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept;

using Engine = std::mt19937_64;

Engine make_engine(std::uint64_t seed);

/// Fixed stream ids used across the library; keeps seeds stable when new
/// consumers are added.
namespace stream {
inline constexpr std::uint64_t kSimulation = 1;
inline constexpr std::uint64_t kBootstrap = 2;
inline constexpr std::uint64_t kSubUniverse = 3;
inline constexpr std::uint64_t kMonteCarlo = 4;
inline constexpr std::uint64_t kFitBootstrap = 5;
}  // namespace stream

}  // namespace trendlab
