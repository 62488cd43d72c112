// Serial reference vs OpenMP batch evaluation of one elimination constraint.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "rfolive/kernels.hpp"
#include "rfolive/olive.hpp"

using namespace rfolive;

namespace {

struct Workload {
    LayeredMdp mdp;
    FunctionClass cls;
    std::vector<std::size_t> ids;
    CompiledConstraint constraint;
};

// Wide level-1 problem: many states, a product class with `per_level` tables
// at level 1, and a dataset of `samples` uniform-action tuples.
Workload make(int states, int per_level, std::size_t samples, bool gated) {
    Rng rng(7);
    std::vector<std::vector<std::string>> names(4);
    names[0] = {"root"};
    for (int x = 0; x < states; ++x) names[1].push_back("a" + std::to_string(x));
    for (int x = 0; x < states; ++x) names[2].push_back("b" + std::to_string(x));
    names[3] = {"end"};
    const std::vector<int> actions{1, 3, 1};
    std::vector<std::vector<double>> trans(3);
    trans[0].assign(states, 1.0 / states);
    for (int x = 0; x < states; ++x)
        for (int a = 0; a < 3; ++a) {
            std::vector<double> row(states);
            double s = 0.0;
            for (double& v : row) s += v = rng.uniform();
            for (double& v : row) trans[1].push_back(v / s);
        }
    trans[2].assign(states, 1.0);
    LayeredMdp mdp(names, actions, trans, "root");

    std::vector<std::vector<LevelTable>> levels(3);
    for (int h = 0; h < 3; ++h) {
        const int count = h == 1 ? per_level : 4;
        for (int k = 0; k < count; ++k) {
            LevelTable t(mdp.num_pairs(h));
            for (double& v : t) v = 2.0 * rng.uniform() - 1.0;
            levels[h].push_back(std::move(t));
        }
    }
    auto cls = FunctionClass::product(mdp.shape(), levels, {1.0, 1.0, 1.0});

    const auto pi = DeterministicPolicy::constant(mdp.shape(), 0);
    std::vector<TransitionTuple> data;
    for (std::size_t i = 0; i < samples; ++i) data.push_back(sample_switched(mdp, pi, 1, ActionSelector::uniform(), rng));
    auto c = compile_dataset(mdp.shape(), data, nullptr, gated);

    // every level-1 table once, with the other levels fixed
    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < cls.level_size(1); ++k) {
        const std::size_t idx[3]{0, k, 0};
        ids.push_back(cls.id_of(idx));
    }
    return {std::move(mdp), std::move(cls), std::move(ids), std::move(c)};
}

template <bool Parallel>
void bm_batch(benchmark::State& state) {
    const auto w = make(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 20000, state.range(2) != 0);
    const auto views = candidate_views(w.cls, w.ids, 1);
    std::vector<double> out(views.size());
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::omp::batch_errors(w.constraint, views, out);
        else
            kernels::serial::batch_errors(w.constraint, views, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(views.size()));
}

void args(benchmark::internal::Benchmark* b) {
    for (int states : {16, 64})
        for (int per_level : {256, 2048})
            for (int gated : {0, 1}) b->Args({states, per_level, gated});
    b->ArgNames({"states", "candidates", "gated"});
}

}  // namespace

BENCHMARK(bm_batch<false>)->Name("batch_errors/serial")->Apply(args)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_batch<true>)->Name("batch_errors/omp")->Apply(args)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
