#include <benchmark/benchmark.h>

#include <mbsf/agent.hpp>

namespace {

using namespace mbsf;

// One select + learn cycle on task A for L = order^2.
void BM_AgentStep(benchmark::State& state) {
  const TaskSpec task = builtin_task("A");
  AgentConfig cfg = AgentConfig::defaults_for(task);
  cfg.order = static_cast<std::size_t>(state.range(0));
  AgentState agent = make_agent(cfg, task);
  Rng rng(1);
  Vector s = task.reset(rng);
  for (auto _ : state) {
    const std::size_t a = select_action(agent, s);
    StepResult r = task.step(s, a, rng);
    learn(agent, {s, a, r.next_state, r.reward});
    s = r.done ? task.reset(rng) : r.next_state;
    benchmark::DoNotOptimize(agent.v_weights.data());
  }
  state.counters["L"] = static_cast<double>(agent.feature_dim());
}
BENCHMARK(BM_AgentStep)->Arg(3)->Arg(4)->Arg(5)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_SolveSuccessor(benchmark::State& state) {
  const TaskSpec task = builtin_task("A");
  AgentConfig cfg = AgentConfig::defaults_for(task);
  cfg.order = static_cast<std::size_t>(state.range(0));
  AgentState agent = make_agent(cfg, task);
  for (auto _ : state) {
    agent.refresh_weights();
    benchmark::DoNotOptimize(agent.v_weights.data());
  }
}
BENCHMARK(BM_SolveSuccessor)->Arg(3)->Arg(4)->Arg(5)->Arg(6)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
