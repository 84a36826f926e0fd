#include <benchmark/benchmark.h>

#include <vector>

#include "qhall/evolve.hpp"
#include "qhall/pump.hpp"
#include "qhall/spectro.hpp"
#include "qhall/topo.hpp"

using namespace qhall;

namespace {

ChainSpec chain(int n, double phi) {
    ChainSpec c;
    c.n_sites = n;
    c.delta = 12;
    c.phi = phi;
    return c;
}

void BM_Eigensolve(benchmark::State& state) {
    const CMatrix h = build_aah_chain(chain(static_cast<int>(state.range(0)), 1.0)).matrix();
    for (auto _ : state) {
        benchmark::DoNotOptimize(eigensolve(h));
    }
}
BENCHMARK(BM_Eigensolve)->Arg(15)->Arg(30)->Arg(120);

void BM_BandScan(benchmark::State& state) {
    std::vector<double> phis;
    for (int m = 0; m < 60; ++m) {
        phis.push_back(kTwoPi * m / 60);
    }
    BandScanOptions opt;
    opt.times = sample_times(500, 0.002);
    opt.freq_grid = padded_frequencies(500, 0.002, 8, 40);
    opt.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(band_scan([](double phi) { return build_aah_chain(chain(15, phi)); }, phis, opt));
    }
}
BENCHMARK(BM_BandScan)->Unit(benchmark::kMillisecond);

void BM_ChernNumber(benchmark::State& state) {
    const BlochModel m = BlochModel::ladder(8, 0.8, 7, 1.6, 12, -12);
    const int n = static_cast<int>(state.range(0));
    ChernOptions opt;
    opt.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(chern_number(m, 1, 2, {n, n}, opt));
    }
}
BENCHMARK(BM_ChernNumber)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_PumpSteps(benchmark::State& state) {
    ChainSpec c = chain(15, 5 * kPi / 3);
    c.delta = 36;
    const PumpSchedule s = PumpSchedule::forward(4.9 * kPi, 0.1);
    PumpOptions opt;
    opt.dt = 1e-4;
    opt.record_every = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pump_evolve(c, s, StateVector::basis(15, 7), opt));
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_PumpSteps)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
