// Parallel kernels against their serial references.
//   ./bench_kernels --benchmark_filter=Metrics

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "cxr/detections.hpp"
#include "cxr/simeval.hpp"

namespace {

using namespace cxr;

std::vector<detections::ImageLabels> synthetic_images(int n_images, int classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, classes - 1), boxes(1, 12);
    std::vector<detections::ImageLabels> images;
    for (int i = 0; i < n_images; ++i) {
        detections::ImageLabels img;
        img.image_id = "img" + std::to_string(i);
        const int n = boxes(rng);
        for (int g = 0; g < n; ++g) {
            const detections::BoundingBox box{0.15 + 0.7 * u(rng), 0.15 + 0.7 * u(rng), 0.05 + 0.3 * u(rng),
                                              0.05 + 0.3 * u(rng)};
            img.gts.push_back({img.image_id, cls(rng), box});
            auto jittered = box;
            jittered.cx += 0.02 * (u(rng) - 0.5);
            jittered.cy += 0.02 * (u(rng) - 0.5);
            img.preds.push_back({img.image_id, u(rng) < 0.8 ? img.gts.back().class_id : cls(rng), jittered, u(rng)});
            if (u(rng) < 0.5) {
                img.preds.push_back({img.image_id, cls(rng),
                                     {0.15 + 0.7 * u(rng), 0.15 + 0.7 * u(rng), 0.1, 0.1}, u(rng)});
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

template <auto Kernel>
void BM_Metrics(benchmark::State& state) {
    const auto registry = detections::ClassRegistry::vinbigdata();
    const auto images = synthetic_images(static_cast<int>(state.range(0)), static_cast<int>(registry.count()), 3);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(images, registry, 0.25));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<simeval::TextPair> synthetic_pairs(int n, std::uint64_t seed) {
    static const std::vector<std::string> words = {
        "heart", "size",  "normal", "left",  "right",    "pleural", "effusion", "lung",  "field", "basal",
        "upper", "zone",  "nodule", "mass",  "opacity",  "no",      "acute",    "cardiopulmonary", "process",
        "mild",  "small", "large",  "there", "is",       "a",       "the",      "in",    "of",    "and"};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1), len(20, 80);
    auto sentence = [&] {
        std::string s;
        for (std::size_t k = len(rng); k > 0; --k) s += words[pick(rng)] + (k % 9 ? " " : ". ");
        return s;
    };
    std::vector<simeval::TextPair> pairs;
    for (int i = 0; i < n; ++i) pairs.push_back({"p" + std::to_string(i), sentence(), sentence()});
    return pairs;
}

template <auto Kernel>
void BM_Similarity(benchmark::State& state) {
    const auto pairs = synthetic_pairs(static_cast<int>(state.range(0)), 5);
    simeval::MockEmbedder embedder;
    for (const auto& p : pairs) {
        embedder.fit(p.ai_text);
        embedder.fit(p.human_text);
    }
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(pairs, embedder));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Metrics<cxr::detections::compute_metrics>)->Name("Metrics/parallel")->Arg(200)->Arg(2000);
BENCHMARK(BM_Metrics<cxr::detections::compute_metrics_reference>)->Name("Metrics/reference")->Arg(200)->Arg(2000);
BENCHMARK(BM_Similarity<cxr::simeval::score_pairs>)->Name("Similarity/parallel")->Arg(500)->Arg(5000);
BENCHMARK(BM_Similarity<cxr::simeval::score_pairs_reference>)->Name("Similarity/reference")->Arg(500)->Arg(5000);

BENCHMARK_MAIN();
