#pragma once

// The three CLI commands as library calls, plus the file-level driver that
// maps failures onto exit statuses.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpqkd/report.hpp"
#include "hpqkd/scenario.hpp"

namespace hpqkd::commands {

enum class ExitCode : int {
  ok = 0,
  config_error = 2,   // unreadable, malformed or invalid scenario / options
  runtime_error = 3,  // failure while simulating or writing output
  check_failed = 4,   // optics-verify ran but a verification check failed
};

enum class Command { simulate, attack_sweep, optics_verify };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view name);

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  /// simulate: session.num_slots; attack-sweep: attack.trials;
  /// optics-verify: optics.sweep_points.
  std::optional<std::size_t> trials;
};

/// Applies overrides and re-validates. Throws scenario::ConfigError.
void apply_overrides(scenario::Scenario& s, Command command, const Overrides& overrides);

struct CommandResult {
  ExitCode exit_code = ExitCode::ok;
  report::ReportBundle bundle;
  std::vector<std::string> summary;  // one line per mode / table
};

/// Runs every configured mode. Throws scenario::ConfigError when a two-channel
/// mode is requested over an untuned link.
CommandResult simulate(const scenario::Scenario& s);

/// Brute-force success curve over attack.alpha_sq_over_M * attack.M, and the
/// photon-number-splitting table over pns.mu x pns.thresholds.
CommandResult attack_sweep(const scenario::Scenario& s);

/// Closed-form vs. oracle sideband sweeps with fringe fits, complementarity,
/// channel independence and the measured interference prefactor. An untuned
/// link yields a warning and skipped orientation checks, not a failure.
CommandResult optics_verify(const scenario::Scenario& s);

CommandResult run(Command command, const scenario::Scenario& s);

struct RunOutcome {
  ExitCode exit_code = ExitCode::ok;
  std::vector<std::string> summary;
  std::string error;
  std::vector<std::string> written;  // files produced
  std::string bundle_text;           // set when no output path is configured
};

/// Load, override, run, write. Never throws.
RunOutcome run_file(Command command, const std::string& scenario_path,
                    const Overrides& overrides);

}  // namespace hpqkd::commands
