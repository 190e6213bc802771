#pragma once

#include <cstdint>
#include <random>

namespace hpqkd {

/// Random engine used by every sampling routine. Callers own the engine and
/// pass it by reference, so determinism is entirely under their control.
using Rng = std::mt19937_64;

/// Stream roles. Each (seed, index, role) triple names an independent stream,
/// which lets Monte Carlo work be split across threads without changing
/// results.
enum class StreamRole : std::uint64_t {
  generic = 0,
  shared_key = 1,
  entropy_r = 2,
  alice_bit = 3,
  alice_basis = 4,
  bob_basis = 5,
  weak_channel = 6,
  meso_channel = 7,
  fault = 8,
  attack_trial = 9,
  pns = 10,
  stokes = 11,
};

/// 64-bit finalizer used to decorrelate structured seeds (splitmix64 mix).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Engine for stream `(seed, index, role, sub)`; `sub` separates channels or
/// grid points sharing a slot index.
Rng derive_stream(std::uint64_t seed, std::uint64_t index, StreamRole role,
                  std::uint64_t sub = 0);

/// Poisson draw that accepts a zero mean (returns 0).
std::uint64_t poisson_draw(Rng& rng, double mean);

bool bernoulli_draw(Rng& rng, double p);

}  // namespace hpqkd
