#include "hpqkd/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <thread>

#include "hpqkd/adversary.hpp"
#include "hpqkd/protocol_engine.hpp"
#include "hpqkd/random.hpp"
#include "hpqkd/sideband_optics.hpp"

namespace hpqkd::commands {
namespace {

using nlohmann::json;
using report::format_double;
using std::numbers::pi;

std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

report::ReportBundle new_bundle(Command command, const scenario::Scenario& s) {
  report::ReportBundle b;
  b.command = std::string(to_string(command));
  b.seed = s.seed;
  b.scenario_text = s.source_text;
  return b;
}

double expected_ratio(protocol::Mode mode) {
  return static_cast<double>(protocol::channel_count(mode)) *
         (protocol::uses_mesoscopic_channel(mode) ? 2.0 : 1.0);
}

// ---- optics-verify helpers -------------------------------------------------

struct SweepRow {
  double dphi = 0.0;
  optics::SidebandSpectrum closed;
  optics::SidebandSpectrum oracle;
};

optics::ModulationPlan with_phases(const optics::ModulationPlan& base, double dphi1, double dphi2) {
  auto p = base;
  p.phi1A = base.phi1B + dphi1;
  p.phi2A = base.phi2B + dphi2;
  return p;
}

std::vector<double> sweep_grid(std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k) {
    g[k] = 2.0 * pi * static_cast<double>(k) / static_cast<double>(points);
  }
  return g;
}

// Sweeps one channel's phase difference with the other held at `other`.
std::vector<SweepRow> run_sweep(const scenario::Scenario& s, const optics::FiberLink& fiber,
                                const optics::OracleGrid& grid, int channel, double other,
                                optics::ModulatorModel model) {
  const auto phases = sweep_grid(s.optics.sweep_points);
  std::vector<std::future<SweepRow>> jobs;
  for (double d : phases) {
    jobs.push_back(std::async(std::launch::async, [&, d] {
      const auto plan = channel == 1 ? with_phases(s.plan, d, other) : with_phases(s.plan, other, d);
      return SweepRow{d, optics::sideband_intensities_closed_form(plan, fiber),
                      optics::sideband_intensities_oracle(plan, fiber, grid, model)};
    }));
  }
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

double relative_spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return mean > 0.0 ? (*hi - *lo) / mean : 0.0;
}

template <class Fn>
std::vector<double> column(const std::vector<SweepRow>& rows, Fn fn) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(fn(r));
  return out;
}

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  std::string status;  // pass, fail, skipped
};

json check_json(const Check& c) {
  return json{{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"status", c.status}};
}

Check make_check(std::string name, double value, double limit, bool active) {
  return Check{std::move(name), value, limit, !active ? "skipped" : value <= limit ? "pass" : "fail"};
}

// Largest relative change of channel `watched` intensities while the other
// channel's phase difference sweeps, over several fixed phases of `watched`.
double independence_residual(const scenario::Scenario& s, const optics::FiberLink& fiber,
                             const optics::OracleGrid& grid, int watched) {
  const std::array fixed{0.25 * pi, 0.5 * pi, 0.75 * pi, 1.25 * pi};
  double worst = 0.0;
  for (double f : fixed) {
    const int swept = watched == 1 ? 2 : 1;
    const auto rows = run_sweep(s, fiber, grid, swept, f, s.optics.model);
    auto pick = [watched](const optics::SidebandSpectrum& sp) {
      return watched == 1 ? std::array{sp.upper1, sp.lower1} : std::array{sp.upper2, sp.lower2};
    };
    const auto ref = pick(rows.front().oracle);
    for (const auto& r : rows) {
      const auto v = pick(r.oracle);
      for (std::size_t i = 0; i < 2; ++i) {
        if (ref[i] > 0.0) worst = std::max(worst, std::abs(v[i] - ref[i]) / ref[i]);
      }
    }
  }
  return worst;
}

std::string model_name(optics::ModulatorModel m) {
  return m == optics::ModulatorModel::push_pull ? "push_pull" : "single_arm";
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::simulate: return "simulate";
    case Command::attack_sweep: return "attack-sweep";
    case Command::optics_verify: return "optics-verify";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  for (auto c : {Command::simulate, Command::attack_sweep, Command::optics_verify}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

void apply_overrides(scenario::Scenario& s, Command command, const Overrides& o) {
  if (o.out) s.output.path = *o.out;
  if (o.seed) s.seed = *o.seed;
  if (o.trials) {
    switch (command) {
      case Command::simulate: s.num_slots = *o.trials; break;
      case Command::attack_sweep: s.attack.trials = *o.trials; break;
      case Command::optics_verify: s.optics.sweep_points = *o.trials; break;
    }
  }
  s.validate();
}

CommandResult simulate(const scenario::Scenario& s) {
  const auto fiber = s.fiber();
  const bool tuned = optics::is_tuned(optics::propagate(s.plan, fiber));
  for (auto mode : s.modes) {
    if (protocol::channel_count(mode) > 1 && !tuned) {
      throw scenario::ConfigError(
          "fiber.length_m: link is not tuned (channel phases pi/2 and 3*pi/2), required by mode " +
          std::string(protocol::to_string(mode)));
    }
  }

  CommandResult res;
  res.bundle = new_bundle(Command::simulate, s);
  report::CsvTable table{"modes",
                         {"mode", "slots", "channels", "usable_slots", "raw_detections",
                          "sifted_bits", "bit_errors", "qber", "useful_rate_bits_per_slot",
                          "baseline_reference_rate", "rate_ratio_vs_baseline",
                          "rate_ratio_stderr", "expected_ratio", "meso_pulses", "meso_erasures",
                          "meso_bit_errors"},
                         {}};
  json modes = json::array();
  json comparison = json::array();
  for (auto mode : s.modes) {
    const auto rep = protocol::run_session(s.session_config(mode));
    modes.push_back(report::to_json(rep));
    const double expected = expected_ratio(mode);
    const double z = rep.rate_ratio_stderr > 0.0
                         ? (rep.rate_ratio_vs_baseline - expected) / rep.rate_ratio_stderr
                         : 0.0;
    comparison.push_back({{"mode", protocol::to_string(mode)},
                          {"useful_rate_bits_per_slot", rep.useful_rate_bits_per_slot},
                          {"rate_ratio_vs_baseline", rep.rate_ratio_vs_baseline},
                          {"rate_ratio_stderr", rep.rate_ratio_stderr},
                          {"expected_ratio", expected},
                          {"z_score", z}});
    table.add_row({std::string(protocol::to_string(mode)), std::to_string(rep.slots),
                   std::to_string(rep.channels), std::to_string(rep.usable_slots),
                   std::to_string(rep.raw_detections), std::to_string(rep.sifted_bits),
                   std::to_string(rep.bit_errors), format_double(rep.qber),
                   format_double(rep.useful_rate_bits_per_slot),
                   format_double(rep.baseline_reference_rate),
                   format_double(rep.rate_ratio_vs_baseline), format_double(rep.rate_ratio_stderr),
                   format_double(expected), std::to_string(rep.meso_pulses),
                   std::to_string(rep.meso_erasures), std::to_string(rep.meso_bit_errors)});
    res.summary.push_back("mode=" + std::string(protocol::to_string(mode)) +
                          " useful_rate=" + fmt_rate(rep.useful_rate_bits_per_slot) +
                          " qber=" + fmt_rate(rep.qber) +
                          " ratio=" + fmt_rate(rep.rate_ratio_vs_baseline) + " +/- " +
                          fmt_rate(rep.rate_ratio_stderr));
  }
  res.bundle.data = json{{"modes", modes}, {"comparison", comparison}};
  res.bundle.tables.push_back(std::move(table));
  return res;
}

CommandResult attack_sweep(const scenario::Scenario& s) {
  CommandResult res;
  res.bundle = new_bundle(Command::attack_sweep, s);

  std::vector<double> grid;
  for (double r : s.attack.alpha_sq_over_M) grid.push_back(r * static_cast<double>(s.attack.M));
  const unsigned threads =
      s.attack.threads ? s.attack.threads : std::max(1u, std::thread::hardware_concurrency());
  const auto points =
      adversary::attack_success_curve(grid, s.attack.M, s.attack.trials, s.seed, threads);

  report::CsvTable bf{"brute_force",
                      {"alpha_sq_over_M", "alpha_sq", "M", "trials", "success_rate",
                       "standard_error"},
                      {}};
  json rows = json::array();
  bool monotone = true;
  std::optional<double> crossover;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    auto row = report::to_json(p);
    row["alpha_sq_over_M"] = s.attack.alpha_sq_over_M[i];
    rows.push_back(row);
    bf.add_row({format_double(s.attack.alpha_sq_over_M[i]), format_double(p.alpha_sq),
                std::to_string(p.M), std::to_string(p.trials), format_double(p.success_rate),
                format_double(p.standard_error)});
    if (i > 0) {
      const auto& prev = points[i - 1];
      const double slack = 2.0 * std::hypot(prev.standard_error, p.standard_error);
      if (p.success_rate < prev.success_rate - slack) monotone = false;
    }
    if (!crossover && p.success_rate >= 0.5) crossover = s.attack.alpha_sq_over_M[i];
  }

  report::CsvTable pns_table{"pns",
                             {"mu", "min_exploitable", "analytic_fraction", "mc_fraction",
                              "mc_standard_error", "mc_trials", "z_score"},
                             {}};
  json pns_rows = json::array();
  json hardening = json::array();
  std::size_t row_index = 0;
  for (double mu : s.pns.mu) {
    std::vector<double> analytic_by_threshold;
    for (unsigned t : s.pns.thresholds) {
      const adversary::PnsModel model{mu, t};
      const double analytic = adversary::pns_exploitable_fraction(model);
      Rng rng = derive_stream(s.seed, row_index++, StreamRole::pns);
      const auto mc = adversary::pns_monte_carlo(model, s.pns.trials, rng);
      const double z = mc.standard_error > 0.0 ? (mc.fraction - analytic) / mc.standard_error : 0.0;
      pns_rows.push_back({{"mu", mu},
                          {"min_exploitable", t},
                          {"analytic_fraction", analytic},
                          {"mc_fraction", mc.fraction},
                          {"mc_standard_error", mc.standard_error},
                          {"mc_trials", mc.trials},
                          {"z_score", z}});
      pns_table.add_row({format_double(mu), std::to_string(t), format_double(analytic),
                         format_double(mc.fraction), format_double(mc.standard_error),
                         std::to_string(mc.trials), format_double(z)});
      analytic_by_threshold.push_back(analytic);
    }
    const auto lo = std::find(s.pns.thresholds.begin(), s.pns.thresholds.end(), 2u);
    const auto hi = std::find(s.pns.thresholds.begin(), s.pns.thresholds.end(), 3u);
    if (lo != s.pns.thresholds.end() && hi != s.pns.thresholds.end()) {
      const double f2 = analytic_by_threshold[static_cast<std::size_t>(lo - s.pns.thresholds.begin())];
      const double f3 = analytic_by_threshold[static_cast<std::size_t>(hi - s.pns.thresholds.begin())];
      hardening.push_back({{"mu", mu}, {"ratio_threshold2_over_threshold3", f3 > 0.0 ? f2 / f3 : 0.0}});
    }
  }

  res.bundle.data = json{
      {"brute_force",
       {{"M", s.attack.M},
        {"trials", s.attack.trials},
        {"points", rows},
        {"monotone_non_decreasing", monotone},
        {"crossover_alpha_sq_over_M", crossover ? json(*crossover) : json(nullptr)}}},
      {"pns", {{"trials", s.pns.trials}, {"rows", pns_rows}, {"hardening", hardening}}},
  };
  res.bundle.tables.push_back(std::move(bf));
  res.bundle.tables.push_back(std::move(pns_table));

  res.summary.push_back("brute_force M=" + std::to_string(s.attack.M) +
                        " points=" + std::to_string(points.size()) +
                        " monotone=" + (monotone ? "yes" : "no") + " crossover_alpha_sq_over_M=" +
                        (crossover ? fmt_rate(*crossover) : std::string("none")));
  for (const auto& h : hardening) {
    res.summary.push_back("pns mu=" + fmt_rate(h["mu"].get<double>()) + " hardening_ratio=" +
                          fmt_rate(h["ratio_threshold2_over_threshold3"].get<double>()));
  }
  return res;
}

CommandResult optics_verify(const scenario::Scenario& s) {
  CommandResult res;
  res.bundle = new_bundle(Command::optics_verify, s);
  std::vector<std::string> warnings = s.plan.warnings();

  const auto fiber = s.fiber();
  const auto phases = optics::propagate(s.plan, fiber);
  const bool tuned = optics::is_tuned(phases);
  if (!tuned) {
    warnings.emplace_back(
        "link not tuned: channel phases are not pi/2 and 3*pi/2; fringe orientation and independence checks skipped");
  }
  const auto& p = s.plan;
  const bool lit1 = p.m1 > 0.0 && p.m3 > 0.0 && p.E0 > 0.0;
  const bool lit2 = p.m2 > 0.0 && p.m4 > 0.0 && p.E0 > 0.0;
  if (!lit1 || !lit2) warnings.emplace_back("zero modulation depth: no interference on a channel");
  const bool small = std::max({p.m1, p.m2, p.m3, p.m4}) <= 0.1;

  const auto grid = optics::default_oracle_grid(p, s.optics.oracle_samples);
  optics::validate_grid(p, grid);

  const auto sweep1 = run_sweep(s, fiber, grid, 1, 0.0, s.optics.model);
  const auto sweep2 = run_sweep(s, fiber, grid, 2, 0.0, s.optics.model);
  const auto phi = sweep_grid(s.optics.sweep_points);

  using optics::FringeShape;
  struct FitPlan {
    const char* sideband;
    const std::vector<SweepRow>* rows;
    double optics::SidebandSpectrum::*field;
    FringeShape shape;
    bool lit;
  };
  const std::array<FitPlan, 4> fit_plans{{
      {"upper1", &sweep1, &optics::SidebandSpectrum::upper1, FringeShape::cos2, lit1},
      {"lower1", &sweep1, &optics::SidebandSpectrum::lower1, FringeShape::sin2, lit1},
      {"upper2", &sweep2, &optics::SidebandSpectrum::upper2, FringeShape::sin2, lit2},
      {"lower2", &sweep2, &optics::SidebandSpectrum::lower2, FringeShape::cos2, lit2},
  }};

  std::vector<Check> checks;
  json fits = json::array();
  double upper1_amplitude = 0.0;
  for (const auto& f : fit_plans) {
    const auto closed = column(*f.rows, [&](const SweepRow& r) { return r.closed.*f.field; });
    const auto oracle = column(*f.rows, [&](const SweepRow& r) { return r.oracle.*f.field; });
    const auto cfit = optics::fit_fringe(phi, closed, f.shape);
    const auto ofit = optics::fit_fringe(phi, oracle, f.shape);
    if (std::string_view(f.sideband) == "upper1") upper1_amplitude = ofit.amplitude;
    fits.push_back({{"sideband", f.sideband},
                    {"shape", f.shape == FringeShape::cos2 ? "cos2" : "sin2"},
                    {"closed_amplitude", cfit.amplitude},
                    {"closed_max_relative_residual", cfit.max_relative_residual},
                    {"oracle_amplitude", ofit.amplitude},
                    {"oracle_max_relative_residual", ofit.max_relative_residual},
                    {"oracle_visibility", optics::visibility(oracle)}});
    checks.push_back(make_check(std::string("fit_") + f.sideband + "_" +
                                    (f.shape == FringeShape::cos2 ? "cos2" : "sin2"),
                                ofit.max_relative_residual, 0.01, tuned && f.lit));
  }

  auto sum1 = [](const SweepRow& r, bool oracle) {
    return oracle ? r.oracle.upper1 + r.oracle.lower1 : r.closed.upper1 + r.closed.lower1;
  };
  auto sum2 = [](const SweepRow& r, bool oracle) {
    return oracle ? r.oracle.upper2 + r.oracle.lower2 : r.closed.upper2 + r.closed.lower2;
  };
  const double closed1 = relative_spread(column(sweep1, [&](const SweepRow& r) { return sum1(r, false); }));
  const double closed2 = relative_spread(column(sweep2, [&](const SweepRow& r) { return sum2(r, false); }));
  const double oracle1 = relative_spread(column(sweep1, [&](const SweepRow& r) { return sum1(r, true); }));
  const double oracle2 = relative_spread(column(sweep2, [&](const SweepRow& r) { return sum2(r, true); }));
  checks.push_back(make_check("complementarity_closed_channel1", closed1, 1e-12, lit1));
  checks.push_back(make_check("complementarity_closed_channel2", closed2, 1e-12, lit2));
  checks.push_back(make_check("complementarity_oracle_channel1", oracle1, 0.01, lit1));
  checks.push_back(make_check("complementarity_oracle_channel2", oracle2, 0.01, lit2));

  const double indep1 = lit1 ? independence_residual(s, fiber, grid, 1) : 0.0;
  const double indep2 = lit2 ? independence_residual(s, fiber, grid, 2) : 0.0;
  checks.push_back(make_check("channel_independence_channel1", indep1, 0.01, tuned && lit1 && small));
  checks.push_back(make_check("channel_independence_channel2", indep2, 0.01, tuned && lit2 && small));

  // Upper-1 fringe amplitude in units of E0^2 m1^2; candidates 1/16 and 1/8.
  const double scale = p.E0 * p.E0 * p.m1 * p.m1;
  const double measured = scale > 0.0 ? upper1_amplitude / scale : 0.0;
  const double d16 = std::abs(measured - 1.0 / 16.0) / (1.0 / 16.0);
  const double d8 = std::abs(measured - 1.0 / 8.0) / (1.0 / 8.0);
  const bool m_ratio = std::abs(p.m1 - 2.0 * p.m3) <= 1e-12 * std::max(1.0, p.m1);
  const std::string confirmed = !lit1 ? "none" : d8 <= d16 ? "1/8" : "1/16";

  // Chirped single-arm modulator, for comparison only.
  const auto single = run_sweep(s, fiber, grid, 1, 0.0, optics::ModulatorModel::single_arm);
  const auto single_upper = column(single, [](const SweepRow& r) { return r.oracle.upper1; });
  const auto single_fit = optics::fit_fringe(phi, single_upper, FringeShape::cos2);

  auto matched_contrast = [&](int channel) {
    const auto spectrum = optics::sideband_intensities_oracle(with_phases(p, 0.0, 0.0), fiber, grid,
                                                          s.optics.model);
    const double u = channel == 1 ? spectrum.upper1 : spectrum.upper2;
    const double l = channel == 1 ? spectrum.lower1 : spectrum.lower2;
    return u + l > 0.0 ? std::abs(u - l) / (u + l) : 0.0;
  };

  report::CsvTable table{"sweep",
                         {"swept", "delta_phi_rad", "closed_upper1", "closed_lower1",
                          "closed_upper2", "closed_lower2", "oracle_upper1", "oracle_lower1",
                          "oracle_upper2", "oracle_lower2"},
                         {}};
  json sweep_rows = json::array();
  for (const auto& [name, rows] : {std::pair{"dphi1", &sweep1}, std::pair{"dphi2", &sweep2}}) {
    for (const auto& r : *rows) {
      table.add_row({name, format_double(r.dphi), format_double(r.closed.upper1),
                     format_double(r.closed.lower1), format_double(r.closed.upper2),
                     format_double(r.closed.lower2), format_double(r.oracle.upper1),
                     format_double(r.oracle.lower1), format_double(r.oracle.upper2),
                     format_double(r.oracle.lower2)});
      sweep_rows.push_back({{"swept", name},
                            {"delta_phi", r.dphi},
                            {"closed", {r.closed.upper1, r.closed.lower1, r.closed.upper2, r.closed.lower2}},
                            {"oracle", {r.oracle.upper1, r.oracle.lower1, r.oracle.upper2, r.oracle.lower2}}});
    }
  }

  bool failed = false;
  json check_rows = json::array();
  for (const auto& c : checks) {
    check_rows.push_back(check_json(c));
    failed = failed || c.status == "fail";
  }

  res.bundle.data = json{
      {"tuning",
       {{"link_phase_channel1", phases.channel1},
        {"link_phase_channel2", phases.channel2},
        {"tuned", tuned},
        {"fiber_length_m", fiber.length_m},
        {"group_delay_s", fiber.group_delay()}}},
      {"oracle",
       {{"model", model_name(s.optics.model)},
        {"samples", grid.samples},
        {"period_s", grid.period}}},
      {"sweep", sweep_rows},
      {"fits", fits},
      {"complementarity",
       {{"closed_relative_spread_channel1", closed1},
        {"closed_relative_spread_channel2", closed2},
        {"oracle_relative_spread_channel1", oracle1},
        {"oracle_relative_spread_channel2", oracle2}}},
      {"channel_independence",
       {{"max_relative_change_channel1", indep1}, {"max_relative_change_channel2", indep2}}},
      {"prefactor",
       {{"measured", measured},
        {"candidate_1_16", 1.0 / 16.0},
        {"candidate_1_8", 1.0 / 8.0},
        {"relative_distance_1_16", d16},
        {"relative_distance_1_8", d8},
        {"m1_equals_2_m3", m_ratio},
        {"confirmed", confirmed}}},
      {"single_arm_reference",
       {{"upper1_amplitude", single_fit.amplitude},
        {"upper1_max_relative_residual", single_fit.max_relative_residual},
        {"upper1_visibility", optics::visibility(single_upper)}}},
      {"contrast",
       {{"matched_phase_contrast_channel1", matched_contrast(1)},
        {"matched_phase_contrast_channel2", matched_contrast(2)}}},
      {"checks", check_rows},
      {"warnings", warnings},
  };
  res.bundle.tables.push_back(std::move(table));

  res.summary.push_back(std::string("optics tuned=") + (tuned ? "yes" : "no") +
                        " prefactor=" + fmt_rate(measured) + " confirmed=" + confirmed +
                        " checks=" + (failed ? "FAIL" : "pass"));
  for (const auto& w : warnings) res.summary.push_back("warning: " + w);
  res.exit_code = failed ? ExitCode::check_failed : ExitCode::ok;
  return res;
}

CommandResult run(Command command, const scenario::Scenario& s) {
  switch (command) {
    case Command::simulate: return simulate(s);
    case Command::attack_sweep: return attack_sweep(s);
    case Command::optics_verify: return optics_verify(s);
  }
  throw std::invalid_argument("unknown command");
}

RunOutcome run_file(Command command, const std::string& scenario_path, const Overrides& overrides) {
  RunOutcome out;
  scenario::Scenario s;
  try {
    s = scenario::load_scenario(scenario_path);
    apply_overrides(s, command, overrides);
  } catch (const std::exception& e) {
    out.exit_code = ExitCode::config_error;
    out.error = std::string("config error: ") + e.what();
    return out;
  }
  try {
    auto res = run(command, s);
    out.summary = std::move(res.summary);
    if (s.output.path.empty()) {
      out.bundle_text = res.bundle.to_json(report::utc_timestamp()).dump(2) + "\n";
    } else {
      out.written = report::write_bundle(res.bundle, s.output.path, s.output.csv);
    }
    out.exit_code = res.exit_code;
  } catch (const scenario::ConfigError& e) {
    out.exit_code = ExitCode::config_error;
    out.error = std::string("config error: ") + e.what();
  } catch (const std::exception& e) {
    out.exit_code = ExitCode::runtime_error;
    out.error = std::string("runtime error: ") + e.what();
  }
  return out;
}

}  // namespace hpqkd::commands
