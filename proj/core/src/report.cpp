#include "hpqkd/report.hpp"

#include <charconv>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace hpqkd::report {
namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::string_view tool_version() { return HPQKD_VERSION; }

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("CsvTable " + name + ": row width does not match the header");
  }
  rows.push_back(std::move(row));
}

std::string CsvTable::to_csv() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(fields[i]);
    }
    out += '\n';
  };
  emit(columns);
  for (const auto& r : rows) emit(r);
  return out;
}

nlohmann::json ReportBundle::to_json(std::string_view timestamp) const {
  return nlohmann::json{
      {"tool", "hpqkd"},
      {"version", tool_version()},
      {"command", command},
      {"seed", seed},
      {"timestamp", timestamp},
      {"scenario", scenario_text},
      {"data", data},
  };
}

std::string ReportBundle::data_text() const { return data.dump(2); }

std::string utc_timestamp() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto days = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{now - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string csv_path(const std::string& bundle_path, std::string_view table) {
  std::filesystem::path p(bundle_path);
  p.replace_extension();
  return p.string() + "." + std::string(table) + ".csv";
}

std::vector<std::string> write_bundle(const ReportBundle& bundle, const std::string& path,
                                      bool with_csv) {
  std::vector<std::string> written;
  write_file(path, bundle.to_json(utc_timestamp()).dump(2) + "\n");
  written.push_back(path);
  if (with_csv) {
    for (const auto& t : bundle.tables) {
      const auto p = csv_path(path, t.name);
      write_file(p, t.to_csv());
      written.push_back(p);
    }
  }
  return written;
}

nlohmann::json to_json(const protocol::SessionReport& r) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& c : r.per_channel) {
    channels.push_back({
        {"channel", c.channel},
        {"usable_slots", c.usable_slots},
        {"raw_detections", c.raw_detections},
        {"sifted_bits", c.sifted_bits},
        {"bit_errors", c.bit_errors},
        {"qber", c.qber},
        {"useful_rate", c.useful_rate},
        {"rate_ratio_vs_baseline", c.rate_ratio_vs_baseline},
    });
  }
  std::size_t detected = 0;
  std::size_t erasures = 0;
  std::size_t basis_announcements = 0;
  for (const auto& t : r.transcript) {
    (t.kind == protocol::TranscriptEntry::Kind::erasure ? erasures : detected) += 1;
    if (t.announced_basis) ++basis_announcements;
  }
  std::size_t key_mismatches = 0;
  for (std::size_t i = 0; i < r.alice_key.size() && i < r.bob_key.size(); ++i) {
    if (r.alice_key[i] != r.bob_key[i]) ++key_mismatches;
  }
  return nlohmann::json{
      {"mode", protocol::to_string(r.mode)},
      {"slots", r.slots},
      {"channels", r.channels},
      {"usable_slots", r.usable_slots},
      {"raw_detections", r.raw_detections},
      {"sifted_bits", r.sifted_bits},
      {"bit_errors", r.bit_errors},
      {"qber", r.qber},
      {"useful_rate_bits_per_slot", r.useful_rate_bits_per_slot},
      {"raw_slot_rate", r.raw_slot_rate},
      {"baseline_reference_rate", r.baseline_reference_rate},
      {"rate_ratio_vs_baseline", r.rate_ratio_vs_baseline},
      {"rate_ratio_stderr", r.rate_ratio_stderr},
      {"meso_pulses", r.meso_pulses},
      {"meso_erasures", r.meso_erasures},
      {"meso_bit_errors", r.meso_bit_errors},
      {"per_channel", channels},
      {"transcript",
       {{"detection_announcements", detected},
        {"erasure_announcements", erasures},
        {"basis_announcements", basis_announcements}}},
      {"key_bits", r.alice_key.size()},
      {"key_mismatches", key_mismatches},
      {"warnings", r.warnings},
  };
}

nlohmann::json to_json(const adversary::SuccessPoint& p) {
  return nlohmann::json{
      {"alpha_sq", p.alpha_sq},
      {"M", p.M},
      {"trials", p.trials},
      {"success_rate", p.success_rate},
      {"standard_error", p.standard_error},
  };
}

}  // namespace hpqkd::report
