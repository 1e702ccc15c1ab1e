// Serial reference vs OpenMP kernels on a desk-sized dictionary.

#include "wbcal/kernels.hpp"
#include "wbcal/sim.hpp"

#include <benchmark/benchmark.h>

using namespace wbcal;

namespace {

struct Fixture {
    Dictionary dict;
    cvec r;
};

const Fixture& fixture()
{
    static const Fixture f = [] {
        sim::ScenarioConfig cfg = sim::preset("desk");
        const sim::TrialInstance inst = sim::make_instance(cfg, cfg.n_pilots.front(), 0);
        const MeasurementSet ms = sim::instance_measurements(inst, 20.0, cfg.sys.p_s);
        const GridSpec gs = GridSpec::defaults(inst.setup.arrays, cfg.sys.n_cp, inst.setup.tau_max);
        Fixture out;
        out.dict = build_dictionary(gs, inst.bs, inst.ue, ms, inst.setup);
        out.r = ms.y.front();
        return out;
    }();
    return f;
}

void BM_correlate_serial(benchmark::State& st)
{
    const Fixture& f = fixture();
    rvec score;
    for (auto _ : st) {
        kernels::correlate_serial(f.dict, f.r, score);
        benchmark::DoNotOptimize(score.data());
    }
}

void BM_correlate_parallel(benchmark::State& st)
{
    const Fixture& f = fixture();
    set_threads(static_cast<int>(st.range(0)));
    rvec score;
    for (auto _ : st) {
        kernels::correlate_parallel(f.dict, f.r, score);
        benchmark::DoNotOptimize(score.data());
    }
}

void BM_materialize_serial(benchmark::State& st)
{
    const Fixture& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(kernels::materialize_serial(f.dict).data());
}

void BM_materialize_parallel(benchmark::State& st)
{
    const Fixture& f = fixture();
    set_threads(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(kernels::materialize_parallel(f.dict).data());
}

// normal equations of a coupling-sized least-squares problem
kernels::ChunkFn normal_chunk(int dim)
{
    return [dim](int c) {
        Rng rng(static_cast<std::uint64_t>(c));
        cmat a(48, dim);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = complex_normal(rng);
        cvec y(48);
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = complex_normal(rng);
        return kernels::NormalEq{a.adjoint() * a, a.adjoint() * y};
    };
}

void BM_reduce_serial(benchmark::State& st)
{
    const auto fn = normal_chunk(24);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::reduce_serial(64, 24, fn).G.data());
}

void BM_reduce_parallel(benchmark::State& st)
{
    set_threads(static_cast<int>(st.range(0)));
    const auto fn = normal_chunk(24);
    for (auto _ : st) benchmark::DoNotOptimize(kernels::reduce_parallel(64, 24, fn).G.data());
}

}  // namespace

BENCHMARK(BM_correlate_serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_correlate_parallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_materialize_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_materialize_parallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reduce_serial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_reduce_parallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
