// Serial reference against the OpenMP kernels.

#include "rieszw/atoms.hpp"
#include "rieszw/operators.hpp"
#include "rieszw/weights.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace rieszw;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_OperatorSweep(benchmark::State& state) {
  const auto f = SampledFunction::indicator(Ball(make_point(1.5), 0.5, 1));
  const auto e = ExponentProfile::equal_split(1, 0.5, 2);
  const auto a = MatrixFamily::from_entries(1, {{1.0}, {-1.0}}, true);
  std::vector<Point> xs;
  for (int i = 0; i < 64; ++i) xs.push_back(make_point(-3.0 + 6.0 * (i + 0.5) / 64));
  const QuadratureScheme q;
  for (auto _ : state) benchmark::DoNotOptimize(apply_T_batch(f, xs, e, a, q, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(xs.size()));
}
BENCHMARK(BM_OperatorSweep)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ApFamily(benchmark::State& state) {
  const auto w = WeightSpec::power_weight(1, 0.5);
  const auto family = BallFamily::for_weight(w);
  const QuadratureScheme q;
  EstimatorOptions opts;
  opts.levels = 2;
  opts.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_Ap_constant(w, 2.0, family, q, opts).constant);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(family.size()));
}
BENCHMARK(BM_ApFamily)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AtomCampaign(benchmark::State& state) {
  const AtomParams params{WeightSpec::power_weight(1, 0.5), 1.0, 2.0, 0};
  CampaignSpec spec;
  spec.count = 60;
  spec.radii = {0.25, 1.0, 4.0};
  const QuadratureScheme q;
  for (auto _ : state) benchmark::DoNotOptimize(sample_atom_campaign(params, spec, q, exec_of(state)));
}
BENCHMARK(BM_AtomCampaign)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
