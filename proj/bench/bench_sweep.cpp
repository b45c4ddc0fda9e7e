#include <benchmark/benchmark.h>

#include "varint/parallel.hpp"
#include "varint/problems.hpp"

using namespace varint;

namespace {

struct Fixture {
    Problem problem;
    Trajectory traj;
    std::unique_ptr<DiscreteLagrangianModel> model;
    NodeConstraints constraints;

    Fixture(const std::string& id, int N) {
        ProblemOptions o;
        o.N = N;
        problem = make_problem(id, o);
        traj = problem.initial_guess();
        if (problem.time_grid) traj.set_times(problem.time_grid(traj));
        model = problem.factory(traj);
        constraints = NodeConstraints(problem.boundary, N, traj.gamma(), traj.dim());
    }
};

const char* problem_name(int64_t i) {
    static const char* names[] = {"fuel", "fuel_interpolation", "four_body"};
    return names[i];
}

void BM_SweepParallel(benchmark::State& state) {
    Fixture f(problem_name(state.range(0)), static_cast<int>(state.range(1)));
    const SweepOptions opts = SweepOptions::from(f.problem.config);
    for (auto _ : state) {
        SweepResult r = sweep(*f.model, f.traj, f.constraints, opts);
        benchmark::DoNotOptimize(r.input_residual);
    }
    state.SetLabel(problem_name(state.range(0)));
    state.counters["threads"] = thread_count();
    state.counters["nodes_per_s"] =
        benchmark::Counter(static_cast<double>(state.iterations()) * state.range(1),
                           benchmark::Counter::kIsRate);
}

void BM_SweepSerial(benchmark::State& state) {
    Fixture f(problem_name(state.range(0)), static_cast<int>(state.range(1)));
    const SweepOptions opts = SweepOptions::from(f.problem.config);
    for (auto _ : state) {
        SweepResult r = sweep_serial(*f.model, f.traj, f.constraints, opts);
        benchmark::DoNotOptimize(r.input_residual);
    }
    state.SetLabel(problem_name(state.range(0)));
    state.counters["nodes_per_s"] =
        benchmark::Counter(static_cast<double>(state.iterations()) * state.range(1),
                           benchmark::Counter::kIsRate);
}

void sizes(benchmark::internal::Benchmark* b) {
    for (int p = 0; p < 3; ++p)
        for (int N : {120, 240, 960}) b->Args({p, N});
}

}  // namespace

BENCHMARK(BM_SweepParallel)->Apply(sizes)->UseRealTime();
BENCHMARK(BM_SweepSerial)->Apply(sizes)->UseRealTime();

BENCHMARK_MAIN();
