#include <benchmark/benchmark.h>

#include "hypomix/model.hpp"
#include "hypomix/poly.hpp"

namespace {

void bm_lie_bracket_l96(benchmark::State& state) {
    const auto m = hypomix::build_lorenz96(5, {1, 1, 0, 0, 0}, 0.1);
    const auto x0 = m.bracket_drift(1, 1);
    const auto z = hypomix::PolyVectorField::constant({1, 0, 0, 0, 0});
    for (auto _ : state) {
        auto b = hypomix::lie_bracket(x0, z);
        benchmark::DoNotOptimize(b);
    }
}
BENCHMARK(bm_lie_bracket_l96);

void bm_drift_eval_triad(benchmark::State& state) {
    const auto m = hypomix::build_triad({1, 1, -2}, 1, 1, 0.1);
    Eigen::VectorXd x(3);
    x << 0.3, -0.7, 1.1;
    for (auto _ : state) {
        Eigen::VectorXd v = m.drift(x);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(bm_drift_eval_triad);

} // namespace

BENCHMARK_MAIN();
