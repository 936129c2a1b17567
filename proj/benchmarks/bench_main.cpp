#include <benchmark/benchmark.h>

#include "synsim/analysis.hpp"
#include "synsim/numerics.hpp"
#include "synsim/simulator.hpp"

namespace {

using namespace synsim;

void BM_RunTrial(benchmark::State& state) {
    TrialConfig cfg = TrialConfig::nominal();
    cfg.duration = static_cast<double>(state.range(0));
    cfg.steady_window = {0.0, cfg.duration};
    cfg.transient_window = {0.0, cfg.duration};
    int index = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_trial(cfg, index++));
    }
    state.SetItemsProcessed(state.iterations() * cfg.steps());
}
BENCHMARK(BM_RunTrial)->Arg(1)->Arg(23)->Unit(benchmark::kMillisecond);

void BM_SolveCare(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    RngStream rng(3, 0);
    Matrix a(n, n), b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal(), b(i, j) = rng.normal();
    const Matrix q = Matrix::Identity(n, n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_care(a, b, q));
    }
}
BENCHMARK(BM_SolveCare)->Arg(2)->Arg(4)->Arg(8);

void BM_UcmAnalysis(benchmark::State& state) {
    RngStream rng(5, 0);
    Matrix data(state.range(0), 4);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        for (int j = 0; j < 4; ++j) data(i, j) = 5.0 + rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ucm_analysis(data));
    }
}
BENCHMARK(BM_UcmAnalysis)->Arg(182)->Arg(7000);

void BM_FitSecondOrder(benchmark::State& state) {
    Vector t = Vector::LinSpaced(2301, 0.0, 23.0);
    Vector y(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) y(i) = 5.0 * second_order_step(0.72, 9.06, t(i));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_second_order(t, y, 5.0));
    }
}
BENCHMARK(BM_FitSecondOrder)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
