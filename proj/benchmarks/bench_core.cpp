#include <benchmark/benchmark.h>

#include "selfreg/experiments.hpp"
#include "selfreg/mirror_lp.hpp"
#include "selfreg/rerm.hpp"
#include "selfreg/rkhs_gd.hpp"

namespace {

using namespace selfreg;

std::shared_ptr<const Dataset> make_data(long n) {
    SyntheticProblem p = generate_regression(n, 2, "sine", 0.2, 12345);
    return std::make_shared<const Dataset>(std::move(p.data));
}

void BM_GramMatrix(benchmark::State& state) {
    auto data = make_data(state.range(0));
    const KernelSpec kernel = KernelSpec::gaussian(0.8);
    for (auto _ : state)
        benchmark::DoNotOptimize(gram_matrix(kernel, data->xs));
}
BENCHMARK(BM_GramMatrix)->Arg(64)->Arg(256);

void BM_RunGd(benchmark::State& state) {
    auto data = make_data(state.range(0));
    const KernelSpec kernel = KernelSpec::gaussian(0.8);
    const LossSpec loss = LossSpec::least_squares(2.0);
    const double eta = std::min(1.0, 1.0 / risk_smoothness(loss, kernel, *data));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            run_gd(loss, data, kernel, GdConfig::constant(eta, 64)));
}
BENCHMARK(BM_RunGd)->Arg(64)->Arg(256);

void BM_RermSolveLs(benchmark::State& state) {
    auto data = make_data(state.range(0));
    RermSolver solver(LossSpec::least_squares(2.0), data, KernelSpec::gaussian(0.8));
    double lambda = 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solver.solve(lambda));
        lambda = lambda < 1.0 ? lambda * 1.3 : 1e-3;
    }
}
BENCHMARK(BM_RermSolveLs)->Arg(64)->Arg(256);

void BM_RermSolveLogistic(benchmark::State& state) {
    SyntheticProblem p = generate_classification(state.range(0), 2, "noisy", 7);
    auto data = std::make_shared<const Dataset>(std::move(p.data));
    RermSolver solver(LossSpec::logistic(), data, KernelSpec::gaussian(0.8));
    double lambda = 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solver.solve(lambda));
        lambda = lambda < 1.0 ? lambda * 1.3 : 1e-3;
    }
}
BENCHMARK(BM_RermSolveLogistic)->Arg(64)->Arg(128);

void BM_MirrorStep(benchmark::State& state) {
    const long dim = state.range(0);
    auto space = std::make_shared<const LpSpace>(
        3.0, Eigen::VectorXd::Constant(dim, 1.0 / dim));
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(dim, -1.0, 1.0);
    Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(dim, -0.5, 0.5);
    const LpPoint f = make_lp_point(v, space);
    for (auto _ : state)
        benchmark::DoNotOptimize(mirror_step(f, g, 0.05));
}
BENCHMARK(BM_MirrorStep)->Arg(64)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
