#include <benchmark/benchmark.h>

#include "plsim/designs.hpp"
#include "plsim/profile.hpp"
#include "plsim/scad.hpp"
#include "plsim/smoother.hpp"

using namespace plsim;

namespace {

const SimSample& sample(Index n) {
  static const SimSample s200 = gen_example2(Scenario::I, 200, 0.1, std::uint64_t{3});
  static const SimSample s1000 = gen_example2(Scenario::I, 1000, 0.1, std::uint64_t{3});
  return n == 200 ? s200 : s1000;
}

ZetaParam start(const SimSample& s) {
  Vector a = s.alpha;
  a(1) += 0.05;
  return ZetaParam(IndexParam::normalized(a), s.beta);
}

void BM_Objective(benchmark::State& st) {
  const SimSample& s = sample(st.range(0));
  const ZetaParam z = start(s);
  for (auto _ : st) benchmark::DoNotOptimize(profile_objective(z, s.data, Bandwidth::fixed(0.15), Kernel()));
}
BENCHMARK(BM_Objective)->Arg(200)->Arg(1000);

void BM_GradientExact(benchmark::State& st) {
  const SimSample& s = sample(st.range(0));
  const ZetaParam z = start(s);
  for (auto _ : st) benchmark::DoNotOptimize(profile_gradient(z, s.data, Bandwidth::fixed(0.15), Kernel()));
}
BENCHMARK(BM_GradientExact)->Arg(200)->Arg(1000);

void BM_GradientPlugIn(benchmark::State& st) {
  const SimSample& s = sample(st.range(0));
  const ZetaParam z = start(s);
  for (auto _ : st) {
    benchmark::DoNotOptimize(profile_gradient(z, s.data, Bandwidth::fixed(0.15), Kernel(), GradientMode::PlugIn));
  }
}
BENCHMARK(BM_GradientPlugIn)->Arg(200)->Arg(1000);

void BM_CvBandwidth(benchmark::State& st) {
  const SimSample& s = sample(st.range(0));
  const ZetaParam z = start(s);
  for (auto _ : st) benchmark::DoNotOptimize(cv_bandwidth(s.data, z, Kernel()));
}
BENCHMARK(BM_CvBandwidth)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& st) {
  const SimSample& s = sample(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(fit_plsim(s.data));
}
BENCHMARK(BM_Fit)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ScadPath(benchmark::State& st) {
  const SimSample& s = sample(200);
  const PlsimFit full = fit_plsim(s.data);
  for (auto _ : st) benchmark::DoNotOptimize(bic_search(s.data, full));
}
BENCHMARK(BM_ScadPath)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
