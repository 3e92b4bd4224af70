#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "stepeval/digest.hpp"
#include "stepeval/judge.hpp"
#include "stepeval/metrics.hpp"
#include "stepeval/optimizer.hpp"

using namespace stepeval;

namespace {

std::vector<BitVector> random_vectors(std::size_t N, std::size_t n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<BitVector> out(N, BitVector(n));
    for (auto& y : out)
        for (auto& bit : y) bit = std::uint8_t(rng() % 2);
    return out;
}

void BM_DiagnosticsSummary(benchmark::State& state) {
    const auto N = std::size_t(state.range(0));
    auto pred = random_vectors(N, 8, 1);
    auto truth = random_vectors(N, 8, 2);
    for (auto _ : state) {
        auto d = diagnostics_summary(pred, truth);
        benchmark::DoNotOptimize(d);
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(N));
}
BENCHMARK(BM_DiagnosticsSummary)->Range(64, 16384);

void BM_ParseVerdict(benchmark::State& state) {
    const std::string reply =
        "The robot grasped the cup and aligned it over the bowl.\n"
        "ANSWER: [1, 0, 1, 1, 0, 1, 0, 0]";
    for (auto _ : state) {
        auto bits = parse_verdict(reply, 8);
        benchmark::DoNotOptimize(bits);
    }
}
BENCHMARK(BM_ParseVerdict);

void BM_ParetoFrontier(benchmark::State& state) {
    std::mt19937 rng(7);
    std::vector<ConfigResult> results(std::size_t(state.range(0)));
    for (std::size_t i = 0; i < results.size(); ++i) {
        results[i].config.model_id = "m" + std::to_string(i);
        results[i].task_accuracy = double(rng() % 1001) / 1000.0;
        results[i].mean_cost = double(rng() % 1001) / 10000.0;
    }
    for (auto _ : state) {
        auto frontier = pareto_frontier(results);
        benchmark::DoNotOptimize(frontier);
    }
}
BENCHMARK(BM_ParetoFrontier)->Range(16, 1024);

void BM_RequestDigest(benchmark::State& state) {
    JudgeRequest request;
    request.prompt_text = std::string(2048, 'p');
    request.model_id = "model-x";
    for (auto _ : state) {
        auto digest = request_digest(request);
        benchmark::DoNotOptimize(digest);
    }
}
BENCHMARK(BM_RequestDigest);

}  // namespace

BENCHMARK_MAIN();
