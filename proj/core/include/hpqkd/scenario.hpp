#pragma once

// Scenario files: one JSON document that fully describes a run. Every key
// except schema_version has a default, and unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hpqkd/protocol_engine.hpp"
#include "hpqkd/sideband_optics.hpp"

namespace hpqkd::scenario {

inline constexpr int kSchemaVersion = 1;

/// Malformed or invalid scenario content; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyDoc {
  std::string_view section;  // empty for top-level keys
  std::string_view key;
  std::string_view unit;
  std::string_view default_value;
  std::string_view description;
};

/// Every accepted key, in document order. The parser accepts exactly these.
std::span<const KeyDoc> key_reference();

/// Help-text rendering of key_reference().
std::string key_reference_text();

struct AttackSettings {
  std::size_t M = 64;
  std::vector<double> alpha_sq_over_M{1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1, 2,
                                      4,        8,       16,       32,       64};
  std::size_t trials = 1000;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct PnsSettings {
  std::vector<double> mu{0.05, 0.1, 0.2};
  std::vector<unsigned> thresholds{2, 3};
  std::size_t trials = 100000;
};

struct OpticsSettings {
  std::size_t sweep_points = 32;
  std::size_t oracle_samples = std::size_t{1} << 14;
  optics::ModulatorModel model = optics::ModulatorModel::push_pull;
};

struct OutputSettings {
  std::string path;  // empty: bundle goes to stdout
  bool csv = false;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  std::vector<protocol::Mode> modes{protocol::Mode::baseline_bb84, protocol::Mode::hybrid,
                                    protocol::Mode::parallel,
                                    protocol::Mode::hybrid_parallel};
  std::size_t num_slots = 10000;
  double bob_basis_fault_fraction = 0.0;
  protocol::ChannelModel channel = protocol::ChannelModel::ideal();
  optics::ModulationPlan plan;
  std::optional<double> fiber_length_m;  // nullopt: tuned length for the plan
  double refractive_index = 1.468;
  AttackSettings attack;
  PnsSettings pns;
  OpticsSettings optics;
  OutputSettings output;
  std::string source_text;  // the file exactly as read

  optics::FiberLink fiber() const;
  protocol::SessionConfig session_config(protocol::Mode mode) const;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Throws ConfigError on malformed JSON, a missing or unsupported
/// schema_version, unknown keys, wrong value types or invalid values.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

}  // namespace hpqkd::scenario
