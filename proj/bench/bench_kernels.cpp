// Serial reference vs OpenMP path for each data-parallel kernel. Set
// OMP_NUM_THREADS to vary the parallel side; Exec::Serial ignores it.

#include "trendlab/concordance.hpp"
#include "trendlab/metrics.hpp"
#include "trendlab/pipeline.hpp"
#include "trendlab/portfolio_engine.hpp"
#include "trendlab/process_model.hpp"
#include "trendlab/signal_engine.hpp"

#include <benchmark/benchmark.h>

using namespace trendlab;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& state) {
    state.SetLabel(state.range(0) ? "parallel" : "serial");
    state.counters["threads"] = state.range(0) ? max_threads() : 1;
}

void BM_Concordance(benchmark::State& state) {
    ConcordanceConfig cfg;
    cfg.t_steps = 200'000;
    cfg.n_seeds = 8;
    for (auto _ : state) benchmark::DoNotOptimize(run_concordance(cfg, exec_of(state)));
    label(state);
}

void BM_SimulateBatch(benchmark::State& state) {
    const auto p = ProcessParams::from_beta0(0.01, 0.1, uniform_correlation(10, 0.3),
                                             uniform_correlation(10, 0.3));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_batch(p, 20'000, std::nullopt, 1, 8, exec_of(state)));
    label(state);
}

void BM_BootstrapSharpe(benchmark::State& state) {
    const auto path = simulate(ProcessParams::scalar(0.01, 0.1), 10'000, std::nullopt, 2);
    const Eigen::VectorXd r = path.returns.col(0);
    BootstrapOptions opts;
    opts.n_resamples = 2000;
    for (auto _ : state) benchmark::DoNotOptimize(bootstrap_sharpe_ci(r, opts, 3, exec_of(state)));
    label(state);
}

void BM_EtaSweep(benchmark::State& state) {
    UniverseSpec u;
    u.n_assets = 20;
    u.days = 4000;
    const auto panel = simulate_universe(u, 4);
    std::vector<IndicatorSpec> specs;
    for (double eta : default_eta_grid()) specs.push_back(IndicatorSpec::ema(eta));
    const auto risk = RiskTrack::build(panel, {});
    const auto warm = sweep_warmup(specs, {});
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep(panel, risk, specs, {}, warm, exec_of(state)));
    label(state);
}

void BM_BbQuadrature(benchmark::State& state) {
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(2000, -3.0, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(bb_quadrature_batch(v, 4.0, 20'000, exec_of(state)));
    label(state);
}

}  // namespace

BENCHMARK(BM_Concordance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapSharpe)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EtaSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BbQuadrature)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
