#include <benchmark/benchmark.h>

#include "mfcavi/analysis.hpp"
#include "mfcavi/gaussian_engine.hpp"
#include "mfcavi/grid_engine.hpp"
#include "mfcavi/rng.hpp"

using namespace mfcavi;

namespace {

Matrix equicorrelated(int d, double rho) {
    Matrix q(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q(i, j) = i == j ? 1.0 : rho;
    return q;
}

void BM_GaussianUpdate(benchmark::State& state) {
    const int block_count = static_cast<int>(state.range(0));
    const Potential pot(equicorrelated(block_count, 0.5),
                        Vector(static_cast<std::size_t>(block_count), 0.0));
    const BlockStructure blocks(std::vector<int>(static_cast<std::size_t>(block_count), 1));
    GaussianProduct q = mf_optimum(pot, blocks);
    for (int k = 0; k < block_count; ++k) q.set_block_mean(k, {k % 2 ? 2.0 : -2.0});
    SplitMix64 rng(1);
    for (auto _ : state) {
        apply_cavi_update(q, next_index(rng, block_count), pot);
        benchmark::DoNotOptimize(q.mean().data());
    }
}
BENCHMARK(BM_GaussianUpdate)->Arg(5)->Arg(20)->Arg(100);

void BM_KlGap(benchmark::State& state) {
    const int block_count = static_cast<int>(state.range(0));
    const Potential pot(equicorrelated(block_count, 0.5),
                        Vector(static_cast<std::size_t>(block_count), 0.0));
    const BlockStructure blocks(std::vector<int>(static_cast<std::size_t>(block_count), 1));
    const GaussianProduct opt = mf_optimum(pot, blocks);
    GaussianProduct q = opt;
    for (int k = 0; k < block_count; ++k) q.set_block_mean(k, {1.5});
    for (auto _ : state) {
        benchmark::DoNotOptimize(kl_gap(q, pot, opt.mean()));
    }
}
BENCHMARK(BM_KlGap)->Arg(5)->Arg(20)->Arg(100);

void BM_GridUpdate(benchmark::State& state) {
    const int points = static_cast<int>(state.range(0));
    const Potential pot(Matrix(2, 2), {0.0, 0.0},
                        {{0.5, {{0, 4}}}, {3.0, {{0, 2}, {1, 2}}}, {0.5, {{1, 4}}}},
                        std::vector<double>{768.0, 768.0});
    const BlockStructure blocks({1, 1});
    const Grid1D grid(-8.0, 8.0, points);
    GridProduct q = gaussian_grid_product(grid, {2.0, -2.0}, {1.0, 1.0}, 4);
    SplitMix64 rng(2);
    for (auto _ : state) {
        q.apply_cavi_update(next_index(rng, 2), pot, blocks);
        benchmark::DoNotOptimize(q.moment(0, 2));
    }
}
BENCHMARK(BM_GridUpdate)->Arg(512)->Arg(2048)->Arg(8192);

void BM_W2Quantile(benchmark::State& state) {
    const int points = static_cast<int>(state.range(0));
    const Grid1D grid(-12.0, 12.0, points);
    std::vector<double> la(static_cast<std::size_t>(points)), lb(la);
    for (int i = 0; i < points; ++i) {
        const double x = grid.node(i);
        la[static_cast<std::size_t>(i)] = -0.5 * x * x;
        lb[static_cast<std::size_t>(i)] = -0.5 * (x - 2.0) * (x - 2.0) / 4.0;
    }
    const GridDensity qa = GridDensity::normalize(grid, la);
    const GridDensity qb = GridDensity::normalize(grid, lb);
    for (auto _ : state) {
        benchmark::DoNotOptimize(w2_1d(qa, qb));
    }
}
BENCHMARK(BM_W2Quantile)->Arg(512)->Arg(2048)->Arg(8192);

void BM_JacobiEigen(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    SplitMix64 rng(3);
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            m(i, j) = rng.next_in(-1.0, 1.0);
            m(j, i) = m(i, j);
        }
    for (auto _ : state) {
        benchmark::DoNotOptimize(sym_eigen(m).values.front());
    }
}
BENCHMARK(BM_JacobiEigen)->Arg(5)->Arg(20)->Arg(50);

void BM_SplitMix64(benchmark::State& state) {
    SplitMix64 rng(42);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rng.next());
    }
}
BENCHMARK(BM_SplitMix64);

}  // namespace

BENCHMARK_MAIN();
