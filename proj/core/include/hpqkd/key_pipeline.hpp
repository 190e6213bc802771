#pragma once

// Mesoscopic-channel key handling: shared seed expansion, the random basis
// sequence R, the quadrant/parity codification of (K', R) onto polarization
// angles, and Bob's decoding with his copy of K'.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpqkd/coherent_polarization.hpp"
#include "hpqkd/random.hpp"

namespace hpqkd::keys {

using Bit = std::uint8_t;
using BitString = std::vector<Bit>;

inline constexpr std::size_t kMinSeedBits = 64;

/// Keystream generator identifier: the seed bits (length-prefixed) are hashed
/// with BLAKE2b-256 into a ChaCha20 (IETF) key; K' is the keystream under an
/// all-zero nonce, read MSB-first per byte.
inline constexpr std::string_view kGeneratorId = "blake2b256-chacha20ietf-v1";

struct SeedKey {
  BitString bits;

  /// Throws std::invalid_argument when shorter than kMinSeedBits.
  void validate() const;

  /// `nbits` bits from hex, MSB-first (defaults to 4 bits per digit).
  static SeedKey from_hex(std::string_view hex, std::optional<std::size_t> nbits = std::nullopt);
  /// Random seed key drawn from `rng` (simulation convenience).
  static SeedKey random(std::size_t nbits, Rng& rng);
};

struct ExpandedKey {
  BitString bits;
  std::string generator_id;
  std::string seed_fingerprint;  // hex BLAKE2b-64 of the length-prefixed seed
};

/// Deterministic expansion of K into `target_bits` bits. Throws when the seed
/// is too short or target_bits == 0.
ExpandedKey expand_key(const SeedKey& seed, std::size_t target_bits);

/// Bits packed MSB-first into hex; a trailing partial nibble is zero padded.
std::string to_hex(std::span<const Bit> bits);
BitString from_hex(std::string_view hex, std::size_t nbits);

/// log2(M); throws unless M is a power of two >= 2 with log2(M) <= 32.
unsigned bits_per_basis(std::size_t M);

/// floor(|K'| / log2(M)).
std::size_t r_length(std::size_t kprime_bits, std::size_t M);

/// R drawn from the injected entropy source (a seeded engine in simulation,
/// kept separate from the K' generator). Throws when length == 0.
BitString generate_R(std::size_t length, Rng& entropy);

struct BasisSlot {
  std::uint32_t basis_index = 0;  // D_K
  double alice_angle = 0.0;       // rad, in [0, pi)
  Bit bit = 0;
};

struct BasisSchedule {
  std::size_t M = 0;
  std::vector<BasisSlot> slots;

  /// Columnar record: a header line then "slot D_K angle bit" per slot, with
  /// the angle printed at round-trip precision.
  std::string to_columnar_text() const;
};

/// D_K for every slot, read big-endian from consecutive log2(M)-bit groups.
std::vector<std::uint32_t> basis_indices(const ExpandedKey& kprime, std::size_t M);

/// D_K * pi / (2M).
double first_quadrant_angle(std::uint32_t basis_index, std::size_t M);

/// The bit value coded in the first quadrant for this D_K: 0 when even, 1
/// when odd. The other bit uses the orthogonal partner angle + pi/2.
Bit first_quadrant_bit(std::uint32_t basis_index);

/// Throws when M is not a power of two or |r| != floor(|K'|/log2 M).
BasisSchedule build_basis_schedule(const ExpandedKey& kprime, std::span<const Bit> r,
                                   std::size_t M);

/// Bob's per-slot decode with his analyzer at the first-quadrant angle:
/// transmit click -> first_quadrant_bit, reflect click -> its complement,
/// no click or both arms -> erasure (nullopt).
std::vector<std::optional<Bit>> bob_decode(const ExpandedKey& kprime,
                                           std::span<const polarization::DetectionEvent> events,
                                           std::size_t M);

}  // namespace hpqkd::keys
