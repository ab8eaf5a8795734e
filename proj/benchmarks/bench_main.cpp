#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hamball/codes.hpp"
#include "hamball/index.hpp"
#include "hamball/matrix.hpp"
#include "hamball/net.hpp"

using namespace hamball;

namespace {

std::vector<BinaryCode> random_codes(std::size_t n, std::size_t bits, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<BinaryCode> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint64_t> words(words_for_bits(bits));
        for (auto& w : words) w = rng();
        if (bits % 64) words.back() &= (1ULL << (bits % 64)) - 1;
        out.emplace_back(bits, std::move(words));
    }
    return out;
}

void BM_HammingDistance(benchmark::State& state) {
    const auto bits = static_cast<std::size_t>(state.range(0));
    const auto codes = random_codes(1024, bits, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(hamming_distance(codes[i & 1023], codes[(i + 1) & 1023]));
        ++i;
    }
}
BENCHMARK(BM_HammingDistance)->Arg(16)->Arg(64)->Arg(256);

// Probe cost is ball_size(b, r) per query whatever the database size.
void BM_QueryRadius(benchmark::State& state) {
    const auto bits = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const auto db = random_codes(n, bits, 2);
    const auto index = CodeIndex::build(db);
    const auto queries = random_codes(256, bits, 3);
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(index.query_radius(queries[i++ & 255], 2));
    state.counters["probes"] = static_cast<double>(ball_size(bits, 2));
}
BENCHMARK(BM_QueryRadius)->Args({16, 10000})->Args({32, 10000})->Args({64, 10000})->Args({64, 100000});

void BM_LinearScan(benchmark::State& state) {
    const auto bits = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const auto db = random_codes(n, bits, 2);
    const auto queries = random_codes(256, bits, 3);
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(linear_scan(db, queries[i++ & 255], 2));
}
BENCHMARK(BM_LinearScan)->Args({16, 10000})->Args({32, 10000})->Args({64, 10000})->Args({64, 100000});

void BM_HashForward(benchmark::State& state) {
    const std::vector<std::size_t> hidden{256};
    const HashModel model(64, hidden, 32, 1);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    Matrix x(128, 64);
    for (double& v : x.data()) v = normal(rng);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
}
BENCHMARK(BM_HashForward);

}  // namespace

BENCHMARK_MAIN();
