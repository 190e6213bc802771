#pragma once

// Report bundles: run metadata, the verbatim scenario, a deterministic data
// section, and optional CSV tables for plotting.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpqkd/adversary.hpp"
#include "hpqkd/protocol_engine.hpp"

namespace hpqkd::report {

std::string_view tool_version();

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

struct CsvTable {
  std::string name;  // file suffix: <stem>.<name>.csv
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string to_csv() const;
};

struct ReportBundle {
  std::string command;
  std::uint64_t seed = 0;
  std::string scenario_text;
  nlohmann::json data = nlohmann::json::object();
  std::vector<CsvTable> tables;

  /// The full document; `timestamp` is the only non-deterministic field.
  nlohmann::json to_json(std::string_view timestamp) const;
  /// data.dump() with fixed formatting; identical across re-runs.
  std::string data_text() const;
};

/// Current UTC time as ISO 8601.
std::string utc_timestamp();

/// Writes the bundle JSON to `path` and, when `with_csv`, each table beside it.
/// Returns the paths written. Throws std::runtime_error on I/O failure.
std::vector<std::string> write_bundle(const ReportBundle& bundle, const std::string& path,
                                      bool with_csv);

/// CSV path for `table` next to the bundle at `bundle_path`.
std::string csv_path(const std::string& bundle_path, std::string_view table);

nlohmann::json to_json(const protocol::SessionReport& report);
nlohmann::json to_json(const adversary::SuccessPoint& point);

}  // namespace hpqkd::report
