#include "hpqkd/random.hpp"

namespace hpqkd {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng derive_stream(std::uint64_t seed, std::uint64_t index, StreamRole role,
                  std::uint64_t sub) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ index);
  h = mix64(h ^ static_cast<std::uint64_t>(role));
  h = mix64(h ^ sub);
  return Rng{h};
}

std::uint64_t poisson_draw(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

bool bernoulli_draw(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  std::bernoulli_distribution dist(p);
  return dist(rng);
}

}  // namespace hpqkd
