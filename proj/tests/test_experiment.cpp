#include <gtest/gtest.h>

#include <filesystem>

#include "hamball/error.hpp"
#include "hamball/experiment.hpp"

using namespace hamball;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.n_source = 120;
    c.n_target = 100;
    c.n_query = 30;
    c.shift.dim = 8;
    c.shift.classes = 3;
    return c;
}

}  // namespace

TEST(ExperimentConfig, JsonRoundTripKeepsEveryField) {
    ExperimentConfig c = small_config();
    c.shift.rotation_deg = 45.0;
    c.train.bits = 32;
    c.train.alpha = 0.3;
    c.train.lambda = 0.2;
    c.train.variant = Variant::kTahT;
    c.train.hidden = {32, 16};
    c.bits_list = {8, 24};
    c.radius = 1;
    const auto j = to_json(c);
    EXPECT_EQ(to_json(experiment_from_json(j)), j);
}

TEST(ExperimentConfig, MissingKeysKeepDefaults) {
    const auto c = experiment_from_json(nlohmann::json::parse(R"({"train":{"bits":32}})"));
    EXPECT_EQ(c.train.bits, 32u);
    EXPECT_EQ(to_json(c)["data"], to_json(ExperimentConfig{})["data"]);
}

TEST(ExperimentConfig, UnknownKeysAreRejected) {
    EXPECT_THROW(experiment_from_json(nlohmann::json::parse(R"({"train":{"alhpa":1}})")), UsageError);
    EXPECT_THROW(experiment_from_json(nlohmann::json::parse(R"({"extra":{}})")), UsageError);
}

TEST(ExperimentConfig, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "hamball_test_experiment.json";
    const ExperimentConfig c = small_config();
    save_experiment(c, path.string());
    EXPECT_EQ(to_json(load_experiment(path.string())), to_json(c));
    std::filesystem::remove(path);
}

TEST(TransferData, SplitsHaveRequestedSizesAndLabels) {
    const auto c = small_config();
    const auto d = make_transfer_data(c);
    EXPECT_EQ(d.source.size(), c.n_source);
    EXPECT_EQ(d.database.size(), c.n_target);
    EXPECT_EQ(d.queries.size(), c.n_query);
    EXPECT_EQ(d.heldout_source.size(), c.n_query);
    EXPECT_EQ(d.source.domain, Domain::kSource);
    EXPECT_EQ(d.queries.domain, Domain::kTarget);
    EXPECT_TRUE(d.source.has_labels());
    EXPECT_TRUE(d.queries.has_labels());
}

TEST(TransferData, TrainingRowsDoNotDependOnHeldOutCount) {
    auto c = small_config();
    const auto a = make_transfer_data(c);
    c.n_query = 5;
    const auto b = make_transfer_data(c);
    EXPECT_EQ(a.source.features.data(), b.source.features.data());
    EXPECT_EQ(a.database.features.data(), b.database.features.data());
    EXPECT_EQ(*a.source.labels, *b.source.labels);
}

TEST(TransferData, HeldOutRowsAreNotTrainingRows) {
    const auto d = make_transfer_data(small_config());
    for (std::size_t i = 0; i < d.heldout_source.size(); ++i) {
        const auto h = d.heldout_source.features.row(i);
        for (std::size_t k = 0; k < d.source.size(); ++k) {
            const auto s = d.source.features.row(k);
            ASSERT_FALSE(std::equal(h.begin(), h.end(), s.begin())) << "held-out row " << i << " equals source row " << k;
        }
    }
}
