#include <benchmark/benchmark.h>

#include "tabmda/augmentation.hpp"
#include "tabmda/classifiers.hpp"
#include "tabmda/encoder.hpp"
#include "tabmda/numerics.hpp"
#include "tabmda/rng.hpp"
#include "tabmda/synthetic.hpp"

namespace {

using namespace tabmda;

EncoderConfig bench_encoder_config(std::size_t d_model) {
    EncoderConfig cfg;
    cfg.f_max = 100;
    cfg.d_model = d_model;
    cfg.n_layers = 2;
    cfg.n_heads = 8;
    cfg.d_ff = 2 * d_model;
    cfg.c_max = 10;
    return cfg;
}

void BM_TransformerEmbed(benchmark::State& state) {
    const auto d_model = static_cast<std::size_t>(state.range(0));
    const auto ctx_rows = static_cast<std::size_t>(state.range(1));
    const auto cfg = bench_encoder_config(d_model);
    const auto weights = generate_synthetic_weights(cfg, 1);
    const Dataset ds = make_blobs(ctx_rows + 8, 16, 4, 2.0, 3);

    Context ctx;
    ctx.features = Matrix(ctx_rows, ds.dim());
    for (std::size_t i = 0; i < ctx_rows; ++i) {
        ctx.features.set_row(i, ds.features.row(i));
        ctx.labels.push_back(ds.labels[i]);
    }
    Matrix queries(8, ds.dim());
    for (std::size_t i = 0; i < 8; ++i) queries.set_row(i, ds.features.row(ctx_rows + i));

    for (auto _ : state) {
        benchmark::DoNotOptimize(transformer_embed(weights, cfg, ctx, queries));
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_TransformerEmbed)
    ->Args({64, 64})
    ->Args({64, 256})
    ->Args({256, 64})
    ->Args({512, 64})
    ->Unit(benchmark::kMillisecond);

void BM_CentroidEmbed(benchmark::State& state) {
    const auto ctx_rows = static_cast<std::size_t>(state.range(0));
    const Dataset ds = make_blobs(ctx_rows + 32, 16, 4, 2.0, 5);
    Context ctx;
    ctx.features = Matrix(ctx_rows, ds.dim());
    for (std::size_t i = 0; i < ctx_rows; ++i) {
        ctx.features.set_row(i, ds.features.row(i));
        ctx.labels.push_back(ds.labels[i]);
    }
    Matrix queries(32, ds.dim());
    for (std::size_t i = 0; i < 32; ++i) queries.set_row(i, ds.features.row(ctx_rows + i));

    for (auto _ : state) {
        benchmark::DoNotOptimize(centroid_embed(ctx, queries, 4));
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_CentroidEmbed)->Arg(64)->Arg(512)->Arg(4096);

void BM_StratifiedSubsample(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Dataset ds = make_blobs(n, 4, 5, 2.0, 7);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(stratified_subsample(ds.labels, n / 2, seed++));
    }
}
BENCHMARK(BM_StratifiedSubsample)->Arg(100)->Arg(1000)->Arg(10000);

void BM_BuildAugmentedTrainset(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    const Dataset ds = make_blobs(n, 8, 4, 2.0, 9);
    const CentroidEncoder encoder(4);
    IcsParams params;
    params.k_contexts = k;
    params.context_fraction = 0.7;
    params.seed = 11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_augmented_trainset(encoder, params, ds));
    }
    state.SetItemsProcessed(state.iterations() * n * k);
}
BENCHMARK(BM_BuildAugmentedTrainset)->Args({80, 20})->Args({80, 50})->Args({400, 20})
    ->Unit(benchmark::kMillisecond);

void BM_FitClassifier(benchmark::State& state) {
    const auto kind = static_cast<ClassifierKind>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const Dataset ds = make_blobs(n, 8, 4, 2.0, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_classifier(kind, ds.features, ds.labels, 1));
    }
}
BENCHMARK(BM_FitClassifier)
    ->Args({static_cast<int>(ClassifierKind::tree), 1000})
    ->Args({static_cast<int>(ClassifierKind::forest), 1000})
    ->Args({static_cast<int>(ClassifierKind::gbdt), 1000})
    ->Args({static_cast<int>(ClassifierKind::logreg), 1000})
    ->Unit(benchmark::kMillisecond);

void BM_PcaFitProject(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    Rng rng(17);
    Matrix data(512, d);
    for (double& v : data.data()) v = rng.next_normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(pca_fit_project(data));
    }
}
BENCHMARK(BM_PcaFitProject)->Arg(8)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

} // namespace

int main(int argc, char** argv) {
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
