#include "hpqkd/key_pipeline.hpp"

#include <sodium.h>

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hpqkd::keys {
namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
  });
}

std::vector<unsigned char> pack_bits(std::span<const Bit> bits) {
  std::vector<unsigned char> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] & 1u) out[i / 8] |= static_cast<unsigned char>(0x80u >> (i % 8));
  }
  return out;
}

// u64 little-endian bit length || packed bits
std::vector<unsigned char> seed_message(const SeedKey& seed) {
  std::vector<unsigned char> msg(8);
  std::uint64_t n = seed.bits.size();
  for (int i = 0; i < 8; ++i) msg[static_cast<std::size_t>(i)] = static_cast<unsigned char>(n >> (8 * i));
  const auto packed = pack_bits(seed.bits);
  msg.insert(msg.end(), packed.begin(), packed.end());
  return msg;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

void SeedKey::validate() const {
  if (bits.size() < kMinSeedBits) {
    throw std::invalid_argument("seed key must hold at least 64 bits");
  }
}

SeedKey SeedKey::from_hex(std::string_view hex, std::optional<std::size_t> nbits) {
  return SeedKey{keys::from_hex(hex, nbits.value_or(hex.size() * 4))};
}

SeedKey SeedKey::random(std::size_t nbits, Rng& rng) {
  SeedKey k;
  k.bits.resize(nbits);
  for (auto& b : k.bits) b = static_cast<Bit>(rng() >> 63);
  return k;
}

ExpandedKey expand_key(const SeedKey& seed, std::size_t target_bits) {
  seed.validate();
  if (target_bits == 0) throw std::invalid_argument("expand_key: target_bits must be >= 1");
  ensure_sodium();

  const auto msg = seed_message(seed);
  std::array<unsigned char, crypto_stream_chacha20_ietf_KEYBYTES> key{};
  crypto_generichash(key.data(), key.size(), msg.data(), msg.size(), nullptr, 0);
  std::array<unsigned char, 8> fp{};
  crypto_generichash(fp.data(), fp.size(), msg.data(), msg.size(), nullptr, 0);

  std::array<unsigned char, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
  std::vector<unsigned char> stream((target_bits + 7) / 8);
  crypto_stream_chacha20_ietf(stream.data(), stream.size(), nonce.data(), key.data());
  sodium_memzero(key.data(), key.size());

  ExpandedKey out;
  out.generator_id = std::string(kGeneratorId);
  out.bits.resize(target_bits);
  for (std::size_t i = 0; i < target_bits; ++i) {
    out.bits[i] = static_cast<Bit>((stream[i / 8] >> (7 - i % 8)) & 1u);
  }
  BitString fp_bits(64);
  for (std::size_t i = 0; i < 64; ++i) fp_bits[i] = static_cast<Bit>((fp[i / 8] >> (7 - i % 8)) & 1u);
  out.seed_fingerprint = to_hex(fp_bits);
  return out;
}

std::string to_hex(std::span<const Bit> bits) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve((bits.size() + 3) / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned v = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      v <<= 1;
      if (i + j < bits.size()) v |= bits[i + j] & 1u;
    }
    out.push_back(digits[v]);
  }
  return out;
}

BitString from_hex(std::string_view hex, std::size_t nbits) {
  if (nbits > hex.size() * 4) throw std::invalid_argument("from_hex: not enough hex digits");
  BitString out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) {
    const int v = hex_value(hex[i / 4]);
    if (v < 0) throw std::invalid_argument("from_hex: invalid hex digit");
    out[i] = static_cast<Bit>((v >> (3 - i % 4)) & 1);
  }
  return out;
}

unsigned bits_per_basis(std::size_t M) {
  if (M < 2 || !std::has_single_bit(M)) {
    throw std::invalid_argument("M must be a power of two >= 2");
  }
  const auto b = static_cast<unsigned>(std::countr_zero(M));
  if (b > 32) throw std::invalid_argument("M must not exceed 2^32");
  return b;
}

std::size_t r_length(std::size_t kprime_bits, std::size_t M) {
  return kprime_bits / bits_per_basis(M);
}

BitString generate_R(std::size_t length, Rng& entropy) {
  if (length == 0) throw std::invalid_argument("generate_R: length must be >= 1");
  BitString r(length);
  for (auto& b : r) b = static_cast<Bit>(entropy() >> 63);
  return r;
}

std::vector<std::uint32_t> basis_indices(const ExpandedKey& kprime, std::size_t M) {
  const unsigned width = bits_per_basis(M);
  const std::size_t n = kprime.bits.size() / width;
  std::vector<std::uint32_t> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::uint64_t v = 0;
    for (unsigned j = 0; j < width; ++j) v = (v << 1) | (kprime.bits[s * width + j] & 1u);
    out[s] = static_cast<std::uint32_t>(v);
  }
  return out;
}

double first_quadrant_angle(std::uint32_t basis_index, std::size_t M) {
  return static_cast<double>(basis_index) * std::numbers::pi / (2.0 * static_cast<double>(M));
}

Bit first_quadrant_bit(std::uint32_t basis_index) {
  return static_cast<Bit>(basis_index & 1u);
}

BasisSchedule build_basis_schedule(const ExpandedKey& kprime, std::span<const Bit> r,
                                   std::size_t M) {
  const auto indices = basis_indices(kprime, M);
  if (r.size() != indices.size()) {
    throw std::invalid_argument("build_basis_schedule: |R| must equal floor(|K'|/log2 M)");
  }
  BasisSchedule sched;
  sched.M = M;
  sched.slots.resize(indices.size());
  for (std::size_t s = 0; s < indices.size(); ++s) {
    const std::uint32_t dk = indices[s];
    const Bit bit = r[s] & 1u;
    const bool first_quadrant = bit == first_quadrant_bit(dk);
    const double base = first_quadrant_angle(dk, M);
    sched.slots[s] = BasisSlot{dk, first_quadrant ? base : base + 0.5 * std::numbers::pi, bit};
  }
  return sched;
}

std::string BasisSchedule::to_columnar_text() const {
  std::ostringstream os;
  os << "# M=" << M << "\n# slot D_K angle_rad bit\n";
  char buf[64];
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto& slot = slots[s];
    auto res = std::to_chars(buf, buf + sizeof buf, slot.alice_angle);
    os << s << ' ' << slot.basis_index << ' ' << std::string_view(buf, res.ptr) << ' '
       << static_cast<int>(slot.bit) << '\n';
  }
  return os.str();
}

std::vector<std::optional<Bit>> bob_decode(const ExpandedKey& kprime,
                                           std::span<const polarization::DetectionEvent> events,
                                           std::size_t M) {
  const auto indices = basis_indices(kprime, M);
  if (events.size() != indices.size()) {
    throw std::invalid_argument("bob_decode: event count must equal the schedule slot count");
  }
  std::vector<std::optional<Bit>> out(events.size());
  for (std::size_t s = 0; s < events.size(); ++s) {
    const auto& ev = events[s];
    if (!ev.single_click()) continue;
    const Bit fq = first_quadrant_bit(indices[s]);
    out[s] = ev.transmit_clicked() ? fq : static_cast<Bit>(fq ^ 1u);
  }
  return out;
}

}  // namespace hpqkd::keys
