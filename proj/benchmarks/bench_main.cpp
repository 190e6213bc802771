#include <benchmark/benchmark.h>

#include "hpqkd/adversary.hpp"
#include "hpqkd/key_pipeline.hpp"
#include "hpqkd/protocol_engine.hpp"
#include "hpqkd/sideband_optics.hpp"

namespace {

using namespace hpqkd;

void BM_SidebandOracle(benchmark::State& state) {
  optics::ModulationPlan plan;
  const auto fiber = protocol::default_tuned_fiber(plan);
  const auto grid = optics::default_oracle_grid(plan, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(optics::sideband_intensities_oracle(plan, fiber, grid));
  }
}
BENCHMARK(BM_SidebandOracle)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMicrosecond);

void BM_SidebandClosedForm(benchmark::State& state) {
  optics::ModulationPlan plan;
  const auto fiber = protocol::default_tuned_fiber(plan);
  for (auto _ : state) {
    plan.phi1A += 1e-3;
    benchmark::DoNotOptimize(optics::sideband_intensities_closed_form(plan, fiber));
  }
}
BENCHMARK(BM_SidebandClosedForm);

void BM_BruteForceIdentify(benchmark::State& state) {
  const auto M = static_cast<std::size_t>(state.range(0));
  const adversary::BruteForceAttacker attacker(adversary::BruteForceConfig::uniform(M));
  const auto pulse = polarization::TwoModeCoherentState::from_mean_photons(4.0 * M, 0.3);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(attacker.identify(pulse, rng));
}
BENCHMARK(BM_BruteForceIdentify)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_Session(benchmark::State& state) {
  protocol::SessionConfig c;
  c.mode = static_cast<protocol::Mode>(state.range(0));
  c.num_slots = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(protocol::run_session(c));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.num_slots));
}
BENCHMARK(BM_Session)
    ->Arg(static_cast<int>(protocol::Mode::baseline_bb84))
    ->Arg(static_cast<int>(protocol::Mode::hybrid_parallel))
    ->Unit(benchmark::kMillisecond);

void BM_ExpandKey(benchmark::State& state) {
  const auto seed = keys::SeedKey::from_hex("00112233445566778899aabbccddeeff");
  const auto bits = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(keys::expand_key(seed, bits));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bits / 8));
}
BENCHMARK(BM_ExpandKey)->Arg(1 << 12)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
