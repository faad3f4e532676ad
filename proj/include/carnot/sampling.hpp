#pragma once

#include "carnot/group.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace carnot {

class NormSpec;

using Rng = std::mt19937_64;

/// Deterministic substream for (seed, stream, chunk). Stream tags separate
/// independent consumers of one seed; chunks make parallel loops
/// reproducible regardless of thread count.
Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk = 0);

/// Points per RNG chunk in sampling loops.
inline constexpr std::size_t kChunkSize = 256;

/// Uniform direction on the Euclidean unit sphere of R^dim.
Vec random_direction(Rng& rng, int dim);

/// `count` directions on S^{n+m-1}, chunked substreams of (seed, stream).
std::vector<Vec> sphere_directions(int dim, std::size_t count, std::uint64_t seed, std::uint64_t stream);

/// Dilate the direction u (as a point) onto the level set {N = R}. Exact by
/// homogeneity: delta_{R / N(u)} u.
GroupPoint onto_level_set(const Step2Group& g, const NormSpec& norm, const Vec& direction, double R);

std::vector<GroupPoint> sample_level_set(const Step2Group& g, const NormSpec& norm, std::size_t count, double R,
                                         std::uint64_t seed, std::uint64_t stream);

}  // namespace carnot
