#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "spreadkit/analysis.hpp"
#include "spreadkit/eigen.hpp"
#include "spreadkit/fieldlang.hpp"
#include "spreadkit/media.hpp"
#include "spreadkit/simulate.hpp"

using namespace spreadkit;

namespace {

media::MediumSpec make_medium(std::size_t dim, const std::string& f, std::vector<std::string> q = {}) {
    media::MediumConfig c;
    c.dim = dim;
    c.f = f;
    c.q = std::move(q);
    return media::build_medium(c);
}

void BM_ExprEval(benchmark::State& state) {
    const auto e = fieldlang::parse_expr("(1 + 0.5*sin(2*pi*x1))*u*(1-u)", 1, true);
    std::vector<double> x{0.3};
    double u = 0.4, acc = 0.0;
    for (auto _ : state) {
        acc += e.eval(x, u);
        x[0] += 1e-6;
    }
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_ExprEval);

void BM_PowerIteration1d(benchmark::State& state) {
    const auto m = make_medium(1, "(1+0.5*sin(2*pi*x1))*u*(1-u)");
    const std::vector<double> z{1.0};
    const auto op = eigen::assemble(m, z, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(eigen::principal_eigen(op).k);
}
BENCHMARK(BM_PowerIteration1d)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PowerIterationShear(benchmark::State& state) {
    const auto m = make_medium(2, "u*(1-u)", {"2*sin(2*pi*x2)", "0"});
    const std::vector<double> z{0.8, 0.3};
    const auto op = eigen::assemble(m, z, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(eigen::principal_eigen(op).k);
}
BENCHMARK(BM_PowerIterationShear)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SimulationStep2d(benchmark::State& state) {
    const auto m = make_medium(2, "u*(1-u)", {"2*sin(2*pi*x2)", "0"});
    simulate::SimConfig c;
    c.R_dom = static_cast<double>(state.range(0));
    c.dx = 0.25;
    c.initial = simulate::BallDatum{{0.0, 0.0}, 5.0, 1.0};
    simulate::Simulator sim(m, c);
    auto s = sim.init();
    const double dt = sim.stable_dt();
    for (auto _ : state) sim.step(s, dt);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sim.grid().size()));
}
BENCHMARK(BM_SimulationStep2d)->Arg(20)->Arg(80)->Unit(benchmark::kMicrosecond);

void BM_Hausdorff(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-10.0, 10.0);
    std::vector<geometry::Point2> P(static_cast<std::size_t>(state.range(0))), Q(P.size());
    for (auto& p : P) p = {U(rng), U(rng)};
    for (auto& q : Q) q = {U(rng), U(rng)};
    for (auto _ : state) benchmark::DoNotOptimize(analysis::hausdorff(P, Q));
}
BENCHMARK(BM_Hausdorff)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
