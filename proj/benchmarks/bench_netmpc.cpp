#include <benchmark/benchmark.h>

#include <memory>

#include "netmpc/presets.hpp"
#include "netmpc/simulation.hpp"
#include "netmpc/synthesis.hpp"

namespace {

using namespace netmpc;

std::shared_ptr<const OfflineMoments> four_dim_moments() {
  static const auto mo = [] {
    const SimConfig cfg = four_dim_config();
    return std::make_shared<const OfflineMoments>(
        estimate_moments(cfg.model, cfg.sensor, cfg.control, cfg.sat, 20000, 1));
  }();
  return mo;
}

void BM_EstimateMoments(benchmark::State& state) {
  const SimConfig cfg = four_dim_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate_moments(cfg.model, cfg.sensor, cfg.control, cfg.sat, state.range(0), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateMoments)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

// One 30-step closed-loop path (10 QP solves) per policy variant.
void BM_RunPath(benchmark::State& state) {
  SimConfig cfg = four_dim_config();
  cfg.variant = static_cast<PolicyVariant>(state.range(0));
  cfg.stability.enabled = state.range(1) != 0 && cfg.variant != PolicyVariant::fallback;
  cfg.T = 30;
  const SimSetup setup = prepare(cfg, four_dim_moments());
  int path = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_path(setup, path++));
  state.SetLabel(VariantSpec{cfg.variant, cfg.stability.enabled}.label());
}
BENCHMARK(BM_RunPath)
    ->Args({static_cast<int>(PolicyVariant::full), 1})
    ->Args({static_cast<int>(PolicyVariant::diagonal), 1})
    ->Args({static_cast<int>(PolicyVariant::zero), 1})
    ->Args({static_cast<int>(PolicyVariant::full), 0})
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
