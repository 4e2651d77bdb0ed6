// Serial vs OpenMP kernels, and the plain-loop reference, on the same inputs.
#include <benchmark/benchmark.h>

#include "widthlab/estimators.hpp"
#include "widthlab/kernels.hpp"
#include "widthlab/reference.hpp"

using namespace widthlab;

namespace {

Matrix inputs(int m, int n0, std::uint64_t stream = 0) {
    PhiloxEngine eng(1, stream);
    NormalSampler normal;
    Matrix X(m, n0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n0; ++j) X(i, j) = normal(eng);
    return X;
}

ArchSpec tanh_fc(int depth, int n0) {
    ArchSpec a;
    a.depth = depth;
    a.input_dim = n0;
    a.sigma_b2 = 0.05;
    a.sigma_w2 = 1.5;
    a.phi = Nonlinearity::tanh();
    return a;
}

ArchSpec tanh_conv(int D) {
    ArchSpec a = tanh_fc(3, 3);
    a.kind = ArchKind::conv1d;
    a.conv.half_width = 1;
    a.conv.spatial_dim = D;
    a.conv.weights = {0.25, 0.5, 0.25};
    return a;
}

void BM_NtkFc(benchmark::State& st, Exec exec) {
    const int m = int(st.range(0));
    const Matrix X = inputs(m, 8);
    const ArchSpec a = tanh_fc(4, 8);
    for (auto _ : st) benchmark::DoNotOptimize(ntk_fc(a, X, exec));
    st.SetComplexityN(m);
}

void BM_NtkFcReference(benchmark::State& st) {
    const Matrix X = inputs(int(st.range(0)), 8);
    const ArchSpec a = tanh_fc(4, 8);
    for (auto _ : st) benchmark::DoNotOptimize(reference::ntk_fc(a, X));
}

void BM_Conv(benchmark::State& st, Exec exec) {
    const int D = int(st.range(0));
    std::vector<Matrix> X;
    for (int s = 0; s < 3; ++s) X.push_back(inputs(3, D, s));
    const ArchSpec a = tanh_conv(D);
    for (auto _ : st) benchmark::DoNotOptimize(nngp_conv1d(a, X, exec));
}

void BM_ConvReference(benchmark::State& st) {
    const int D = int(st.range(0));
    std::vector<Matrix> X;
    for (int s = 0; s < 3; ++s) X.push_back(inputs(3, D, s));
    const ArchSpec a = tanh_conv(D);
    for (auto _ : st) benchmark::DoNotOptimize(reference::nngp_conv1d(a, X));
}

void BM_EmpiricalNngp(benchmark::State& st, Exec exec) {
    const Matrix X = inputs(4, 8);
    const ArchSpec a = tanh_fc(2, 8);
    const WidthProfile wp{{256, 256}, 8};
    for (auto _ : st)
        benchmark::DoNotOptimize(empirical_nngp(a, wp, X, 2048, RngPlan(3), NngpSampler::layerwise,
                                                Parameterization::ntk, exec));
}

void BM_NormalSampler(benchmark::State& st) {
    PhiloxEngine eng(5, 0);
    NormalSampler normal;
    double acc = 0.0;
    for (auto _ : st) acc += normal(eng);
    benchmark::DoNotOptimize(acc);
}

} // namespace

BENCHMARK_CAPTURE(BM_NtkFc, serial, Exec::serial)->RangeMultiplier(2)->Range(16, 128);
BENCHMARK_CAPTURE(BM_NtkFc, parallel, Exec::parallel)->RangeMultiplier(2)->Range(16, 128);
BENCHMARK(BM_NtkFcReference)->RangeMultiplier(2)->Range(16, 128);
BENCHMARK_CAPTURE(BM_Conv, serial, Exec::serial)->Arg(8)->Arg(16);
BENCHMARK_CAPTURE(BM_Conv, parallel, Exec::parallel)->Arg(8)->Arg(16);
BENCHMARK(BM_ConvReference)->Arg(8)->Arg(16);
BENCHMARK_CAPTURE(BM_EmpiricalNngp, serial, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EmpiricalNngp, parallel, Exec::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalSampler);

BENCHMARK_MAIN();
