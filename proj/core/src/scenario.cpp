#include "hpqkd/scenario.hpp"

#include <array>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hpqkd::scenario {
namespace {

using nlohmann::json;

constexpr std::array kKeys{
    KeyDoc{"", "schema_version", "-", "(required)", "scenario format version; must be 1"},
    KeyDoc{"", "seed", "-", "1", "master seed (unsigned 64-bit) for every random stream"},

    KeyDoc{"session", "modes", "-", "[\"baseline_bb84\",\"hybrid\",\"parallel\",\"hybrid_parallel\"]",
           "protocol modes run by simulate, in order"},
    KeyDoc{"session", "num_slots", "slots", "10000", "weak-pulse time slots per session"},
    KeyDoc{"session", "bob_basis_fault_fraction", "probability", "0",
           "fraction of slots where Bob's optics silently use the other basis"},

    KeyDoc{"channel", "length_km", "km", "0", "fiber length seen by the photons"},
    KeyDoc{"channel", "loss_db_per_km", "dB/km", "0.2", "fiber attenuation"},
    KeyDoc{"channel", "detector_efficiency", "probability", "1", "single-photon detector efficiency"},
    KeyDoc{"channel", "dark_count_prob", "probability", "0", "dark count per detector per gate"},
    KeyDoc{"channel", "mu_weak", "photons", "0.1", "mean photons per weak pulse, per sideband channel"},
    KeyDoc{"channel", "alpha_sq_meso", "photons", "25", "mean photons per mesoscopic pulse"},
    KeyDoc{"channel", "M", "bases", "256", "mesoscopic basis count (power of two)"},

    KeyDoc{"modulation", "E0", "field units", "1", "optical field amplitude"},
    KeyDoc{"modulation", "omega0", "rad/s", "1.2152e15", "optical carrier angular frequency"},
    KeyDoc{"modulation", "psi1", "rad", "4.712389", "Mach-Zehnder bias (quadrature is 3*pi/2)"},
    KeyDoc{"modulation", "m1", "rad", "0.1", "Alice modulation depth, channel 1"},
    KeyDoc{"modulation", "m2", "rad", "0.1", "Alice modulation depth, channel 2"},
    KeyDoc{"modulation", "m3", "rad", "0.05", "Bob modulation depth, channel 1"},
    KeyDoc{"modulation", "m4", "rad", "0.05", "Bob modulation depth, channel 2"},
    KeyDoc{"modulation", "Omega1", "rad/s", "6.2832e9", "RF angular frequency, channel 1 (1 GHz)"},
    KeyDoc{"modulation", "Omega2", "rad/s", "8.7965e9", "RF angular frequency, channel 2 (1.4 GHz)"},
    KeyDoc{"modulation", "phi1A", "rad", "0", "Alice RF phase, channel 1"},
    KeyDoc{"modulation", "phi2A", "rad", "0", "Alice RF phase, channel 2"},
    KeyDoc{"modulation", "phi1B", "rad", "0", "Bob RF phase, channel 1"},
    KeyDoc{"modulation", "phi2B", "rad", "0", "Bob RF phase, channel 2"},

    KeyDoc{"fiber", "length_m", "m", "tuned", "link length for the sideband phases; omit for the tuned length"},
    KeyDoc{"fiber", "refractive_index", "-", "1.468", "group index of the link"},

    KeyDoc{"attack", "M", "bases", "64", "basis count attacked by the brute-force sweep"},
    KeyDoc{"attack", "alpha_sq_over_M", "ratio", "[1/16 ... 64]", "grid of |alpha|^2 / M values"},
    KeyDoc{"attack", "trials", "trials", "1000", "brute-force trials per grid point"},
    KeyDoc{"attack", "threads", "threads", "0", "worker threads for grid points (0: all cores)"},

    KeyDoc{"pns", "mu", "photons", "[0.05, 0.1, 0.2]", "mean photon numbers for the photon-number-splitting table"},
    KeyDoc{"pns", "thresholds", "photons", "[2, 3]", "minimum photons Eve needs (2 or 3)"},
    KeyDoc{"pns", "trials", "pulses", "100000", "Monte Carlo pulses per table row"},

    KeyDoc{"optics", "sweep_points", "points", "32", "phase-difference samples over [0, 2*pi)"},
    KeyDoc{"optics", "oracle_samples", "samples", "16384", "time samples per oracle period"},
    KeyDoc{"optics", "model", "-", "\"push_pull\"", "oracle modulator: push_pull or single_arm"},

    KeyDoc{"output", "path", "path", "\"\"", "bundle path (empty: standard output)"},
    KeyDoc{"output", "csv", "bool", "false", "also write <path stem>.<table>.csv tables"},
};

std::string qualified(std::string_view section, std::string_view key) {
  return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

void check_keys(const json& obj, std::string_view section) {
  if (!obj.is_object()) {
    throw ConfigError(qualified("", section.empty() ? "<root>" : section) + ": expected an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const auto& doc : kKeys) {
      if (doc.section == section && doc.key == key) known = true;
    }
    if (!known && section.empty()) {
      for (const auto& doc : kKeys) {
        if (doc.section == key) known = true;
      }
    }
    if (!known) throw ConfigError("unknown key: " + qualified(section, key));
  }
}

const json* section_of(const json& root, std::string_view name) {
  auto it = root.find(std::string(name));
  if (it == root.end()) return nullptr;
  check_keys(*it, name);
  return &*it;
}

template <class T>
void read(const json* obj, std::string_view section, std::string_view key, T& out) {
  if (obj == nullptr) return;
  auto it = obj->find(std::string(key));
  if (it == obj->end()) return;
  const std::string name = qualified(section, key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError(name + ": expected true or false");
    out = it->get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw ConfigError(name + ": expected a string");
    out = it->get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) throw ConfigError(name + ": expected a number");
    out = it->get<T>();
  } else {
    if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() &&
                                     it->get<std::int64_t>() < 0)) {
      throw ConfigError(name + ": expected a non-negative integer");
    }
    const auto v = it->get<std::uint64_t>();
    if (v > std::numeric_limits<T>::max()) throw ConfigError(name + ": value out of range");
    out = static_cast<T>(v);
  }
}

template <class T>
void read_list(const json* obj, std::string_view section, std::string_view key,
               std::vector<T>& out) {
  if (obj == nullptr) return;
  auto it = obj->find(std::string(key));
  if (it == obj->end()) return;
  const std::string name = qualified(section, key);
  if (!it->is_array()) throw ConfigError(name + ": expected an array");
  std::vector<T> values;
  for (const auto& v : *it) {
    json wrapper{{"v", v}};
    T item{};
    read(&wrapper, section, "v", item);
    values.push_back(item);
  }
  out = std::move(values);
}

// Validation messages from the domain types use their own type names; map them
// onto scenario keys.
std::string scenario_message(std::string message) {
  const std::array<std::pair<std::string_view, std::string_view>, 3> prefixes{{
      {"ModulationPlan.", "modulation."},
      {"FiberLink.", "fiber."},
      {"session.", "session."},
  }};
  for (const auto& [from, to] : prefixes) {
    if (message.starts_with(from)) return std::string(to) + message.substr(from.size());
  }
  return message;
}

}  // namespace

std::span<const KeyDoc> key_reference() { return kKeys; }

std::string key_reference_text() {
  std::ostringstream os;
  os << "Scenario keys (JSON; every key but schema_version is optional):\n";
  std::string_view current = "<none>";
  for (const auto& doc : kKeys) {
    if (doc.section != current) {
      current = doc.section;
      os << "  [" << (current.empty() ? "top level" : current) << "]\n";
    }
    os << "    " << qualified(doc.section, doc.key) << "  (" << doc.unit
       << ", default " << doc.default_value << ")  " << doc.description << '\n';
  }
  return os.str();
}

optics::FiberLink Scenario::fiber() const {
  if (fiber_length_m) return optics::FiberLink{*fiber_length_m, refractive_index};
  return protocol::default_tuned_fiber(plan, refractive_index);
}

protocol::SessionConfig Scenario::session_config(protocol::Mode mode) const {
  protocol::SessionConfig cfg;
  cfg.mode = mode;
  cfg.num_slots = num_slots;
  cfg.channel = channel;
  cfg.plan = plan;
  cfg.fiber = fiber();
  cfg.seed = seed;
  cfg.bob_basis_fault_fraction = bob_basis_fault_fraction;
  return cfg;
}

void Scenario::validate() const {
  try {
    if (schema_version != kSchemaVersion) {
      throw ConfigError("schema_version: unsupported value " + std::to_string(schema_version));
    }
    if (modes.empty()) throw ConfigError("session.modes: at least one mode is required");
    if (fiber_length_m && !(*fiber_length_m >= 0.0)) {
      throw ConfigError("fiber.length_m must be >= 0");
    }
    if (!(refractive_index >= 1.0)) throw ConfigError("fiber.refractive_index must be >= 1");
    session_config(modes.front()).validate();
    if (attack.M < 2) throw ConfigError("attack.M must be >= 2");
    if (attack.alpha_sq_over_M.empty()) throw ConfigError("attack.alpha_sq_over_M: grid is empty");
    for (double r : attack.alpha_sq_over_M) {
      if (!(r > 0.0)) throw ConfigError("attack.alpha_sq_over_M: values must be > 0");
    }
    if (attack.trials < 100) throw ConfigError("attack.trials must be >= 100");
    if (pns.mu.empty() || pns.thresholds.empty()) {
      throw ConfigError("pns.mu and pns.thresholds must be non-empty");
    }
    for (double mu : pns.mu) {
      if (!(mu >= 0.0)) throw ConfigError("pns.mu: values must be >= 0");
    }
    for (unsigned t : pns.thresholds) {
      if (t != 2 && t != 3) throw ConfigError("pns.thresholds: values must be 2 or 3");
    }
    if (pns.trials == 0) throw ConfigError("pns.trials must be >= 1");
    if (optics.sweep_points < 4) throw ConfigError("optics.sweep_points must be >= 4");
    if (optics.oracle_samples < 16) throw ConfigError("optics.oracle_samples must be >= 16");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(scenario_message(e.what()));
  }
}

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("scenario must be a JSON object");
  check_keys(root, "");
  if (!root.contains("schema_version")) throw ConfigError("schema_version: missing (required)");

  Scenario s;
  s.source_text = std::string(text);
  read(&root, "", "schema_version", s.schema_version);
  read(&root, "", "seed", s.seed);

  const json* session = section_of(root, "session");
  if (session && session->contains("modes")) {
    std::vector<std::string> names;
    read_list(session, "session", "modes", names);
    s.modes.clear();
    for (const auto& n : names) {
      auto mode = protocol::parse_mode(n);
      if (!mode) throw ConfigError("session.modes: unknown mode \"" + n + "\"");
      s.modes.push_back(*mode);
    }
  }
  read(session, "session", "num_slots", s.num_slots);
  read(session, "session", "bob_basis_fault_fraction", s.bob_basis_fault_fraction);

  const json* channel = section_of(root, "channel");
  read(channel, "channel", "length_km", s.channel.length_km);
  read(channel, "channel", "loss_db_per_km", s.channel.loss_db_per_km);
  read(channel, "channel", "detector_efficiency", s.channel.detector_efficiency);
  read(channel, "channel", "dark_count_prob", s.channel.dark_count_prob);
  read(channel, "channel", "mu_weak", s.channel.mu_weak);
  read(channel, "channel", "alpha_sq_meso", s.channel.alpha_sq_meso);
  read(channel, "channel", "M", s.channel.M);

  const json* mod = section_of(root, "modulation");
  auto& p = s.plan;
  read(mod, "modulation", "E0", p.E0);
  read(mod, "modulation", "omega0", p.omega0);
  read(mod, "modulation", "psi1", p.psi1);
  read(mod, "modulation", "m1", p.m1);
  read(mod, "modulation", "m2", p.m2);
  read(mod, "modulation", "m3", p.m3);
  read(mod, "modulation", "m4", p.m4);
  read(mod, "modulation", "Omega1", p.Omega1);
  read(mod, "modulation", "Omega2", p.Omega2);
  read(mod, "modulation", "phi1A", p.phi1A);
  read(mod, "modulation", "phi2A", p.phi2A);
  read(mod, "modulation", "phi1B", p.phi1B);
  read(mod, "modulation", "phi2B", p.phi2B);

  const json* fiber = section_of(root, "fiber");
  if (fiber && fiber->contains("length_m")) {
    double length = 0.0;
    read(fiber, "fiber", "length_m", length);
    s.fiber_length_m = length;
  }
  read(fiber, "fiber", "refractive_index", s.refractive_index);

  const json* attack = section_of(root, "attack");
  read(attack, "attack", "M", s.attack.M);
  read_list(attack, "attack", "alpha_sq_over_M", s.attack.alpha_sq_over_M);
  read(attack, "attack", "trials", s.attack.trials);
  read(attack, "attack", "threads", s.attack.threads);

  const json* pns = section_of(root, "pns");
  read_list(pns, "pns", "mu", s.pns.mu);
  read_list(pns, "pns", "thresholds", s.pns.thresholds);
  read(pns, "pns", "trials", s.pns.trials);

  const json* opt = section_of(root, "optics");
  read(opt, "optics", "sweep_points", s.optics.sweep_points);
  read(opt, "optics", "oracle_samples", s.optics.oracle_samples);
  if (opt && opt->contains("model")) {
    std::string model;
    read(opt, "optics", "model", model);
    if (model == "push_pull") {
      s.optics.model = optics::ModulatorModel::push_pull;
    } else if (model == "single_arm") {
      s.optics.model = optics::ModulatorModel::single_arm;
    } else {
      throw ConfigError("optics.model: expected \"push_pull\" or \"single_arm\"");
    }
  }

  const json* out = section_of(root, "output");
  read(out, "output", "path", s.output.path);
  read(out, "output", "csv", s.output.csv);

  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace hpqkd::scenario
