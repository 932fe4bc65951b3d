// Serial vs OpenMP timings for the three data-parallel kernels. Run with
// --benchmark_filter=... to narrow; thread counts sweep 1, 2, 4, hardware.
#include <benchmark/benchmark.h>

#include <thread>
#include <vector>

#include "scene_embed/cooccur.hpp"
#include "scene_embed/corpus.hpp"
#include "scene_embed/embedding.hpp"
#include "scene_embed/eval.hpp"
#include "scene_embed/random.hpp"
#include "scene_embed/spatial.hpp"

namespace {

using namespace scene_embed;

Corpus bench_corpus() {
    SyntheticSpec spec;
    spec.n_scenes = 40;
    spec.n_objects = 400;
    spec.images_per_scene = 100;
    spec.overlap = 0.2;
    spec.seed = 7;
    for (int s = 0; s < spec.n_scenes; ++s) {
        spec.supercategory.push_back(s < spec.n_scenes / 2 ? "a" : "b");
    }
    return generate_synthetic(spec);
}

Mask bench_mask(int side) {
    Mask m(static_cast<std::size_t>(side) * static_cast<std::size_t>(side), 0);
    Rng rng(11);
    // a few random blobs, roughly matching segmentation mask density
    for (int b = 0; b < 12; ++b) {
        const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(side)));
        const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(side)));
        const int r = 8 + static_cast<int>(rng.below(24));
        for (int y = std::max(0, cy - r); y < std::min(side, cy + r); ++y) {
            for (int x = std::max(0, cx - r); x < std::min(side, cx + r); ++x) {
                m[static_cast<std::size_t>(y) * side + x] = 1;
            }
        }
    }
    return m;
}

EmbeddingMatrix bench_embeddings(int rows, int d) {
    EmbeddingMatrix e;
    e.rows = rows;
    e.d = d;
    e.tokens.reserve(static_cast<std::size_t>(rows));
    e.values.resize(static_cast<std::size_t>(rows) * d);
    Rng rng(23);
    for (int i = 0; i < rows; ++i) {
        e.tokens.push_back("t" + std::to_string(i));
        for (int k = 0; k < d; ++k) e.values[static_cast<std::size_t>(i) * d + k] = rng.gaussian();
    }
    return e;
}

void bm_dilate_serial(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const Mask m = bench_mask(side);
    for (auto _ : state) {
        benchmark::DoNotOptimize(serial::dilate_mask(m, side, side, 3));
    }
}

void bm_dilate_omp(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const int threads = static_cast<int>(state.range(1));
    const Mask m = bench_mask(side);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dilate_mask(m, side, side, 3, threads));
    }
}

void bm_matrix_serial(benchmark::State& state) {
    const Corpus c = bench_corpus();
    for (auto _ : state) {
        benchmark::DoNotOptimize(serial::build_matrix(c));
    }
}

void bm_matrix_omp(benchmark::State& state) {
    const Corpus c = bench_corpus();
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_matrix(c, threads));
    }
}

void bm_pairwise_serial(benchmark::State& state) {
    const EmbeddingMatrix e = bench_embeddings(static_cast<int>(state.range(0)), 100);
    for (auto _ : state) {
        benchmark::DoNotOptimize(serial::pairwise_cosine(e));
    }
}

void bm_pairwise_omp(benchmark::State& state) {
    const EmbeddingMatrix e = bench_embeddings(static_cast<int>(state.range(0)), 100);
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairwise_cosine(e, threads));
    }
}

int hw() { return static_cast<int>(std::thread::hardware_concurrency()); }

}  // namespace

BENCHMARK(bm_dilate_serial)->Arg(256)->Arg(1024);
BENCHMARK(bm_dilate_omp)
    ->Args({256, 2})
    ->Args({256, hw()})
    ->Args({1024, 2})
    ->Args({1024, 4})
    ->Args({1024, hw()});
BENCHMARK(bm_matrix_serial);
BENCHMARK(bm_matrix_omp)->Arg(2)->Arg(4)->Arg(hw());
BENCHMARK(bm_pairwise_serial)->Arg(400)->Arg(1500);
BENCHMARK(bm_pairwise_omp)
    ->Args({400, 2})
    ->Args({400, hw()})
    ->Args({1500, 2})
    ->Args({1500, 4})
    ->Args({1500, hw()});

BENCHMARK_MAIN();
