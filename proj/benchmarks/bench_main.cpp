#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "deepmkl/arch.hpp"
#include "deepmkl/span.hpp"
#include "deepmkl/stats.hpp"
#include "deepmkl/svm.hpp"
#include "oracles.hpp"

using namespace deepmkl;

namespace {

struct Problem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    ArchConfig arch;

    Problem(int n, int layers) : arch(layers, 1, default_roster()) { oracle::make_blobs(n, 1.0, 17, X, y, 1.0, 10); }
};

}  // namespace

// Args: n, layers.
static void BM_Forward(benchmark::State& state) {
    const Problem p(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(forward(p.arch, p.X).final_gram.data());
}
BENCHMARK(BM_Forward)->ArgsProduct({{50, 100, 200}, {1, 2, 3}})->Unit(benchmark::kMillisecond);

static void BM_GradTheta(benchmark::State& state) {
    const Problem p(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const GramStack stack = forward(p.arch, p.X);
    for (auto _ : state) benchmark::DoNotOptimize(grad_theta(p.arch, stack).size());
}
BENCHMARK(BM_GradTheta)->ArgsProduct({{50, 100, 200}, {1, 2, 3}})->Unit(benchmark::kMillisecond);

static void BM_Smo(benchmark::State& state) {
    const Problem p(static_cast<int>(state.range(0)), 2);
    const Eigen::MatrixXd K = forward(p.arch, p.X).final_gram;
    for (auto _ : state) benchmark::DoNotOptimize(solve(K, p.y).dual_value);
}
BENCHMARK(BM_Smo)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

// Workspace plus the T_span derivative for every weight: one training step's span work.
static void BM_SpanGrad(benchmark::State& state) {
    const Problem p(static_cast<int>(state.range(0)), 2);
    const GramStack stack = forward(p.arch, p.X);
    const auto dK = grad_theta(p.arch, stack);
    const SvmModel model = solve(stack.final_gram, p.y);
    const SpanConfig cfg;
    state.counters["sv"] = static_cast<double>(model.sv_indices.size());
    for (auto _ : state) {
        const SpanWorkspace ws = build_workspace(model, stack.final_gram, cfg);
        double total = 0.0;
        for (const auto& d : dK) total += span_grad(ws, d, model, cfg).d_t_span;
        benchmark::DoNotOptimize(total);
    }
}
BENCHMARK(BM_SpanGrad)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_Wilcoxon(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = g(rng);
        b[i] = g(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(stats::wilcoxon_signed_rank(a, b));
}
BENCHMARK(BM_Wilcoxon)->Arg(10)->Arg(20)->Arg(22)->Arg(200);
BENCHMARK_MAIN();
