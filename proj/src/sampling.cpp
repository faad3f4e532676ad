#include "carnot/sampling.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/norms.hpp"

#include <cmath>

namespace carnot {

Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(chunk & 0xffffffffu), static_cast<std::uint32_t>(chunk >> 32)};
  return Rng(seq);
}

Vec random_direction(Rng& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(dim);
  double len = 0.0;
  // A zero Gaussian vector has probability zero, but keep drawing rather than divide by it.
  do {
    for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
    len = v.norm();
  } while (!(len > 0.0));
  return v / len;
}

std::vector<Vec> sphere_directions(int dim, std::size_t count, std::uint64_t seed, std::uint64_t stream) {
  std::vector<Vec> out(count);
  const std::size_t chunks = (count + kChunkSize - 1) / kChunkSize;
  kernels::for_each_index(kernels::default_exec(), chunks, [&](std::size_t c) {
    Rng rng = substream(seed, stream, c);
    const std::size_t end = std::min(count, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) out[i] = random_direction(rng, dim);
  });
  return out;
}

GroupPoint onto_level_set(const Step2Group& g, const NormSpec& norm, const Vec& direction, double R) {
  if (!(R > 0.0)) throw Error(ErrorKind::NonpositiveScale, "level must be positive");
  const GroupPoint u = GroupPoint::from_stacked(direction, g.n());
  const double Nu = norm_value(g, norm, u);
  if (!(Nu > 0.0) || !std::isfinite(Nu)) throw Error(ErrorKind::EvaluationFailure, "norm of a direction is not positive");
  return g.dilate(u, R / Nu);
}

std::vector<GroupPoint> sample_level_set(const Step2Group& g, const NormSpec& norm, std::size_t count, double R,
                                         std::uint64_t seed, std::uint64_t stream) {
  const auto dirs = sphere_directions(g.dim(), count, seed, stream);
  std::vector<GroupPoint> out(count);
  kernels::for_each_index(kernels::default_exec(), count,
                          [&](std::size_t i) { out[i] = onto_level_set(g, norm, dirs[i], R); });
  return out;
}

}  // namespace carnot
