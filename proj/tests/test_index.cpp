#include <gtest/gtest.h>

#include <filesystem>

#include "hamball/error.hpp"
#include "hamball/index.hpp"
#include "test_support.hpp"

using namespace hamball;
using hamball::testing::random_code;

TEST(CodeIndex, EmptyBuild) {
    const auto ix = CodeIndex::build(std::vector<BinaryCode>{});
    EXPECT_EQ(ix.size(), 0u);
    EXPECT_TRUE(ix.query_radius(BinaryCode(8), 2).empty());
}

TEST(CodeIndex, DuplicatesShareOneBucket) {
    std::mt19937_64 rng(1);
    const auto c = random_code(24, rng);
    const std::vector<BinaryCode> codes(7, c);
    const auto ix = CodeIndex::build(codes);
    EXPECT_EQ(ix.num_buckets(), 1u);
    ASSERT_NE(ix.bucket(c), nullptr);
    EXPECT_EQ(ix.bucket(c)->size(), 7u);
}

TEST(CodeIndex, EveryIdRetrievableAtRadiusZero) {
    std::mt19937_64 rng(2);
    std::vector<BinaryCode> codes;
    for (int i = 0; i < 1000; ++i) codes.push_back(random_code(32, rng));
    const auto ix = CodeIndex::build(codes);
    EXPECT_EQ(ix.size(), 1000u);
    std::size_t bucket_total = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto hits = ix.query_radius(codes[i], 0);
        bool found = false;
        for (const auto& n : hits) {
            EXPECT_EQ(n.distance, 0u);
            EXPECT_EQ(codes[n.id], codes[i]);
            found |= n.id == i;
        }
        EXPECT_TRUE(found) << i;
    }
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (ix.bucket(codes[i])->front() == i) bucket_total += ix.bucket(codes[i])->size();
    }
    EXPECT_EQ(bucket_total, ix.size());
}

TEST(CodeIndex, FullEightBitCubeAtRadiusTwo) {
    std::vector<BinaryCode> codes;
    for (std::uint64_t w = 0; w < 256; ++w) codes.emplace_back(8, std::vector<std::uint64_t>{w});
    const auto ix = CodeIndex::build(codes);
    std::mt19937_64 rng(3);
    const auto res = ix.query_radius(random_code(8, rng), 2);
    EXPECT_EQ(res.size(), 37u);
}

TEST(CodeIndex, MixedLengthsRejected) {
    const std::vector<BinaryCode> codes{BinaryCode(8), BinaryCode(9)};
    EXPECT_THROW(CodeIndex::build(codes), UsageError);
    const auto ix = CodeIndex::build(std::vector<BinaryCode>{BinaryCode(8)});
    EXPECT_THROW(ix.query_radius(BinaryCode(16), 1), UsageError);
    EXPECT_THROW(linear_scan(std::vector<BinaryCode>{BinaryCode(8)}, BinaryCode(16), 1), UsageError);
}

TEST(CodeIndex, ProbeCountIndependentOfDatabaseSize) {
    std::mt19937_64 rng(4);
    for (std::size_t n : {10u, 1000u, 20000u}) {
        std::vector<BinaryCode> codes;
        for (std::size_t i = 0; i < n; ++i) codes.push_back(random_code(64, rng));
        const auto ix = CodeIndex::build(codes);
        QueryStats stats;
        ix.query_radius(random_code(64, rng), 2, &stats);
        EXPECT_EQ(stats.probes, 2081u);
    }
}

// Databases drawn near a few centers so that radius-2 balls are populated.
static std::vector<BinaryCode> clustered_codes(std::size_t n, std::size_t bits, std::mt19937_64& rng) {
    std::vector<BinaryCode> centers;
    for (int c = 0; c < 5; ++c) centers.push_back(random_code(bits, rng));
    std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1), pos(0, bits - 1), flips(0, 3);
    std::vector<BinaryCode> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto c = centers[pick(rng)];
        for (std::size_t f = flips(rng); f > 0; --f) c.flip(pos(rng));
        out.push_back(c);
    }
    return out;
}

TEST(CodeIndex, MatchesLinearScanOnRandomTrials) {
    std::mt19937_64 rng(5);
    const std::size_t bit_choices[] = {8, 16, 32};
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t b = bit_choices[trial % 3];
        const std::size_t n = 1 + (trial * 37) % 400;
        const auto codes = clustered_codes(n, b, rng);
        const auto ix = CodeIndex::build(codes);
        auto q = codes[static_cast<std::size_t>(trial) % n];
        if (trial % 2) q.flip(static_cast<std::size_t>(trial) % b);
        const std::size_t r = static_cast<std::size_t>(trial) % 4;
        ASSERT_EQ(ix.query_radius(q, r), linear_scan(codes, q, r)) << "trial " << trial;
    }
}

TEST(CodeIndex, SidecarRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "hamball_index_test";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(6);
    const auto codes = clustered_codes(300, 16, rng);
    std::vector<std::uint64_t> ids(codes.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 1000 + 3 * i;
    save_codes((dir / "db.hbc").string(), 16, codes);
    save_ids((dir / "db.ids").string(), ids);
    const auto loaded = CodeIndex::load((dir / "db.hbc").string(), (dir / "db.ids").string());
    const auto direct = CodeIndex::build(codes, ids);
    for (int t = 0; t < 20; ++t) {
        EXPECT_EQ(loaded.query_radius(codes[static_cast<std::size_t>(t)], 2),
                  direct.query_radius(codes[static_cast<std::size_t>(t)], 2));
    }
    std::filesystem::remove_all(dir);
}
