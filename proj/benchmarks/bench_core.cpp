#include <benchmark/benchmark.h>

#include "risvr/config.hpp"
#include "risvr/policy.hpp"
#include "risvr/scheduler.hpp"
#include "risvr/sim.hpp"

using namespace risvr;

namespace {

void BM_LinkRate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ChannelParams params;
  params.n_meta = n;
  LinkGeometry geom;
  geom.s = Grid<std::uint8_t>(4, 3, 1);
  geom.d = Grid<double>(4, 3, 18.0);
  Rng rng(1);
  std::vector<PhaseVector> psi;
  for (int i = 0; i < 12; ++i) psi.push_back(draw_phases(n, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(link_rate(geom, psi, params));
  }
}
BENCHMARK(BM_LinkRate)->Arg(256)->Arg(1024);

void BM_SolveAssignment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  WeightMatrix w(n, n);
  for (auto& v : w.data()) v = rng.uniform(0.0, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_assignment(w, AssignMethod::exact_matching));
  }
}
BENCHMARK(BM_SolveAssignment)->Arg(4)->Arg(8)->Arg(16);

void BM_SolveAssignmentBrute(benchmark::State& state) {
  Rng rng(3);
  WeightMatrix w(4, 4);
  for (auto& v : w.data()) v = rng.uniform(0.0, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_assignment(w, AssignMethod::brute));
  }
}
BENCHMARK(BM_SolveAssignmentBrute);

void BM_PolicyForward(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  Rng rng(4);
  const auto params = PolicyParams::init(PolicyDims{4, 3, h}, rng);
  MdpState st;
  st.s = Grid<std::uint8_t>(4, 3, 1);
  st.q = {1.0, 2.0, 0.5};
  const auto features = encode_state(st, {});
  LstmCarry carry;
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy_forward(params, features, carry));
  }
}
BENCHMARK(BM_PolicyForward)->Arg(32)->Arg(128);

void BM_EpisodeSlot(benchmark::State& state) {
  SimConfig cfg;
  cfg.horizon = 1;
  cfg.finalize();
  SimEnv env(cfg, 0);
  for (auto _ : state) {
    env.begin_slot();
    const auto w = build_weights(env.rates(), env.queues(), cfg.risk);
    benchmark::DoNotOptimize(env.finish_slot(solve_assignment(w, AssignMethod::exact_matching)));
  }
}
BENCHMARK(BM_EpisodeSlot);

}  // namespace

BENCHMARK_MAIN();
