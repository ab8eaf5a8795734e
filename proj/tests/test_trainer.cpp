#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hamball/trainer.hpp"
#include "test_support.hpp"

using namespace hamball;
using hamball::testing::random_matrix;
using hamball::testing::rel_error;

namespace {

TrainConfig small_config(Variant v) {
    TrainConfig cfg;
    cfg.bits = 8;
    cfg.hidden = {12};
    cfg.disc_hidden = {6};
    cfg.batch_size = 8;
    cfg.epochs = 10;
    cfg.steps_per_epoch = 10;
    cfg.variant = v;
    cfg.seed = 3;
    return cfg;
}

DomainPair small_data() {
    ShiftSpec spec;
    spec.classes = 4;
    spec.dim = 6;
    spec.center_scale = 2.0;
    return generate(spec, 120, 120, 4);
}

StepInputs random_inputs(std::size_t pairs, std::size_t dim, std::mt19937_64& rng) {
    StepInputs in;
    in.source_x = random_matrix(2 * pairs, dim, rng, -2.0, 2.0);
    in.target_x = random_matrix(2 * pairs, dim, rng, -2.0, 2.0);
    in.s.resize(pairs);
    for (auto& s : in.s) s = static_cast<int>(rng() % 2);
    return in;
}

// Largest relative error between an analytic gradient and central differences of `f`
// over every parameter of `net`.
template <typename F>
double fd_check(Mlp& net, const MlpGrads& analytic, F f) {
    double worst = 0.0;
    auto params = net.parameters();
    const auto grads = analytic.views();
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t k = 0; k < params[p].size(); ++k) {
            const double orig = params[p][k];
            params[p][k] = orig + 1e-5;
            const double up = f();
            params[p][k] = orig - 1e-5;
            const double down = f();
            params[p][k] = orig;
            worst = std::max(worst, rel_error(grads[p][k], (up - down) / 2e-5));
        }
    }
    return worst;
}

}  // namespace

TEST(Variant, ParseAndPrint) {
    EXPECT_EQ(parse_variant("tah"), Variant::kTah);
    EXPECT_EQ(parse_variant("tah-t"), Variant::kTahT);
    EXPECT_EQ(parse_variant("tah-a"), Variant::kTahA);
    EXPECT_STREQ(to_string(Variant::kTahT), "tah-t");
    EXPECT_EQ(parse_variant(to_string(Variant::kTahA)), Variant::kTahA);
    EXPECT_THROW(parse_variant("dhn"), UsageError);
}

TEST(SamplePairs, SimilarFractionAndLabelAgreement) {
    std::vector<std::uint32_t> labels(500);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint32_t>(i % 10);
    std::mt19937_64 rng(1);
    const auto idx = sample_pairs(labels, 1000, 0.25, rng);
    ASSERT_EQ(idx.size(), 1000u);
    std::size_t similar = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        EXPECT_EQ(idx.s[k], labels[idx.left[k]] == labels[idx.right[k]] ? 1 : 0);
        similar += static_cast<std::size_t>(idx.s[k]);
    }
    const double fraction = static_cast<double>(similar) / 1000.0;
    EXPECT_GE(fraction, 0.2);
    EXPECT_LE(fraction, 0.3);
}

TEST(SamplePairs, SingleClassIsRejected) {
    const std::vector<std::uint32_t> labels(20, 3);
    std::mt19937_64 rng(1);
    EXPECT_THROW(sample_pairs(labels, 4, 0.25, rng), UsageError);
}

TEST(Schedules, MuRampEndpointsAndMonotone) {
    const MuSchedule mu{0.7, 10.0};
    EXPECT_EQ(mu(0.0), 0.0);
    EXPECT_NEAR(mu(1.0), 0.7, 1e-15);
    double prev = -1.0;
    for (int k = 0; k <= 100; ++k) {
        const double v = mu(k / 100.0);
        EXPECT_GE(v, prev);
        EXPECT_LE(v, 0.7 + 1e-15);
        prev = v;
    }
    EXPECT_EQ((MuSchedule{0.0, 10.0})(0.5), 0.0);
}

TEST(Schedules, LrAnnealing) {
    const LrSchedule lr{0.01, 10.0, 0.75};
    EXPECT_DOUBLE_EQ(lr(0.0), 0.01);
    EXPECT_NEAR(lr(1.0), 0.01 / std::pow(11.0, 0.75), 1e-15);
    EXPECT_LT(lr(0.6), lr(0.5));
}

TEST(ComputeStep, ZeroMuAndZeroLambdaReduceToPairLoss) {
    std::mt19937_64 rng(5);
    TrainConfig cfg = small_config(Variant::kTah);
    cfg.lambda = 0.0;
    const HashModel model(6, cfg.hidden, cfg.bits, 1);
    const Discriminator disc(cfg.bits, cfg.disc_hidden, 2);
    const auto in = random_inputs(5, 6, rng);
    const auto r = compute_step(model, disc, in, cfg, 0.0);
    EXPECT_EQ(r.j, r.l);
    EXPECT_TRUE(r.adversarial);
    for (const auto& v : r.hash_adv.views()) {
        for (double x : v) EXPECT_EQ(x, 0.0);
    }
    // The discriminator still learns while the hash network ignores it.
    double disc_norm = 0.0;
    for (const auto& v : r.disc.views()) {
        for (double x : v) disc_norm += x * x;
    }
    EXPECT_GT(disc_norm, 0.0);
}

TEST(ComputeStep, PairGradientMatchesFiniteDifferencesOfJ) {
    std::mt19937_64 rng(6);
    for (Variant v : {Variant::kTah, Variant::kTahT}) {
        const TrainConfig cfg = small_config(v);
        HashModel model(6, cfg.hidden, cfg.bits, 3);
        const Discriminator disc(cfg.bits, cfg.disc_hidden, 4);
        const auto in = random_inputs(4, 6, rng);
        const auto r = compute_step(model, disc, in, cfg, 0.5);
        EXPECT_NEAR(r.j, r.l + cfg.lambda * r.q, 1e-12);
        const double err = fd_check(model.net(), r.hash_pair, [&] { return compute_step(model, disc, in, cfg, 0.5).j; });
        EXPECT_LT(err, 1e-4) << to_string(v);
    }
}

// The hash network receives -mu times the gradient that would lower D.
TEST(ComputeStep, AdversarialBranchIsReversedDomainGradient) {
    std::mt19937_64 rng(7);
    const TrainConfig cfg = small_config(Variant::kTah);
    HashModel model(6, cfg.hidden, cfg.bits, 5);
    const Discriminator disc(cfg.bits, cfg.disc_hidden, 6);
    const auto in = random_inputs(4, 6, rng);
    const double mu = 0.8;
    const auto r = compute_step(model, disc, in, cfg, mu);
    MlpGrads expected = r.hash_adv;
    expected.add_scaled(r.hash_adv, -1.0 - 1.0 / mu);  // -(1/mu) * hash_adv = dD/dtheta_f
    const double err = fd_check(model.net(), expected, [&] { return compute_step(model, disc, in, cfg, mu).d; });
    EXPECT_LT(err, 1e-4);
}

TEST(ComputeStep, DiscriminatorGradientMatchesFiniteDifferencesOfD) {
    std::mt19937_64 rng(8);
    const TrainConfig cfg = small_config(Variant::kTah);
    const HashModel model(6, cfg.hidden, cfg.bits, 7);
    Discriminator disc(cfg.bits, cfg.disc_hidden, 8);
    const auto in = random_inputs(4, 6, rng);
    const auto r = compute_step(model, disc, in, cfg, 1.0);
    EXPECT_LT(fd_check(disc.net(), r.disc, [&] { return compute_step(model, disc, in, cfg, 1.0).d; }), 1e-4);
}

TEST(ComputeStep, DiscriminatorStepLowersDomainLoss) {
    std::mt19937_64 rng(9);
    const TrainConfig cfg = small_config(Variant::kTah);
    const HashModel model(6, cfg.hidden, cfg.bits, 9);
    Discriminator disc(cfg.bits, cfg.disc_hidden, 10);
    const auto in = random_inputs(8, 6, rng);
    const auto before = compute_step(model, disc, in, cfg, 1.0);
    SgdState sgd;
    sgd.momentum = 0.0;
    sgd.weight_decay = 0.0;
    sgd_step(sgd, disc.net(), before.disc, 1e-3);
    EXPECT_LT(compute_step(model, disc, in, cfg, 1.0).d, before.d);
}

TEST(ComputeStep, SourceOnlyVariantSkipsDomainBranch) {
    std::mt19937_64 rng(10);
    const TrainConfig cfg = small_config(Variant::kTahA);
    const HashModel model(6, cfg.hidden, cfg.bits, 1);
    const Discriminator disc(cfg.bits, cfg.disc_hidden, 2);
    auto in = random_inputs(3, 6, rng);
    const auto r = compute_step(model, disc, in, cfg, 1.0);
    EXPECT_FALSE(r.adversarial);
    EXPECT_TRUE(std::isnan(r.d));
    in.source_x = Matrix(5, 6);
    EXPECT_THROW(compute_step(model, disc, in, cfg, 1.0), UsageError);
}

TEST(Trainer, EpochIsBitForBitDeterministic) {
    const auto data = small_data();
    const auto target = data.target.without_labels();
    const TrainConfig cfg = small_config(Variant::kTah);
    Trainer a(cfg, data.source, target);
    Trainer b(cfg, data.source, target);
    a.run(2);
    b.run(2);
    EXPECT_EQ(a.model(), b.model());
    EXPECT_EQ(a.discriminator(), b.discriminator());
    ASSERT_EQ(a.history().size(), 2u);
    EXPECT_EQ(a.history()[1].j, b.history()[1].j);
    EXPECT_EQ(a.history()[1].d, b.history()[1].d);

    TrainConfig other = cfg;
    other.seed = 4;
    Trainer c(other, data.source, target);
    c.run(1);
    EXPECT_NE(c.model(), a.model());
}

TEST(Trainer, ObjectiveDecreasesWithoutAdversary) {
    const auto data = small_data();
    const auto target = data.target.without_labels();
    TrainConfig cfg = small_config(Variant::kTah);
    cfg.mu.mu_max = 0.0;
    Trainer t(cfg, data.source, target);
    t.run(10);
    const auto& h = t.history();
    EXPECT_LT(h.back().j, h.front().j);
    std::size_t decreases = 0;
    for (std::size_t e = 1; e < h.size(); ++e) decreases += h[e].j < h[e - 1].j ? 1 : 0;
    EXPECT_GE(decreases, 6u);
    for (const auto& rec : h) EXPECT_EQ(rec.mu, 0.0);
}

TEST(Trainer, HistoryTracksSchedules) {
    const auto data = small_data();
    const auto target = data.target.without_labels();
    const TrainConfig cfg = small_config(Variant::kTah);
    const auto result = train(cfg, data.source, target);
    ASSERT_EQ(result.history.size(), cfg.epochs);
    for (std::size_t e = 1; e < result.history.size(); ++e) {
        EXPECT_GT(result.history[e].mu, result.history[e - 1].mu);
        EXPECT_LT(result.history[e].lr, result.history[e - 1].lr);
        EXPECT_GE(result.history[e].disc_accuracy, 0.0);
        EXPECT_LE(result.history[e].disc_accuracy, 1.0);
    }
}

TEST(Trainer, RejectsMissingInputs) {
    const auto data = small_data();
    const UnlabeledFeatures empty{Matrix(0, 6)};
    EXPECT_THROW(Trainer(small_config(Variant::kTah), data.source, empty), UsageError);
    EXPECT_NO_THROW(Trainer(small_config(Variant::kTahA), data.source, empty));
    const FeatureDataset unlabeled{data.source.features, std::nullopt, Domain::kSource};
    const auto target = data.target.without_labels();
    EXPECT_THROW(Trainer(small_config(Variant::kTah), unlabeled, target), UsageError);
}

TEST(Encode, ZeroModelGivesAllMinusOne) {
    DenseLayer l;
    l.weight = Matrix(3, 5, 0.0);
    l.bias.assign(5, 0.0);
    l.activation = Activation::kTanh;
    const HashModel m(Mlp({l}));
    std::mt19937_64 rng(1);
    const auto codes = encode(m, random_matrix(700, 3, rng));
    ASSERT_EQ(codes.size(), 700u);
    for (const auto& c : codes) {
        for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(c.sign(k), -1);
    }
    EXPECT_THROW(encode(m, Matrix(2, 4)), UsageError);
}

TEST(DomainProbe, SeparatesShiftedDomainsAndNotIdenticalOnes) {
    ShiftSpec spec;
    spec.classes = 3;
    spec.dim = 4;
    spec.rotation_deg = 0.0;
    spec.translation = 3.0;
    const auto far = generate(spec, 300, 300, 1);
    TrainConfig cfg = small_config(Variant::kTah);
    // An identity-like hash network keeps the translation visible in code space.
    DenseLayer l;
    l.weight = Matrix(4, 8, 0.0);
    for (std::size_t k = 0; k < 4; ++k) l.weight(k, k) = 0.5;
    l.bias.assign(8, 0.0);
    l.activation = Activation::kTanh;
    const HashModel m(Mlp({l}));
    cfg.lr.base = 0.01;
    const auto probe = fit_domain_probe(m, far.source.features, far.target.features, cfg, 300);
    EXPECT_GT(domain_accuracy(probe, m, far.source.features, far.target.features), 0.9);

    // Identical domains: every row is scored once as source and once as target.
    const auto same = fit_domain_probe(m, far.source.features, far.source.features, cfg, 300);
    EXPECT_DOUBLE_EQ(domain_accuracy(same, m, far.source.features, far.source.features), 0.5);
}

TEST(History, CsvLayout) {
    const auto path = (std::filesystem::temp_directory_path() / "hamball_history.csv").string();
    const std::vector<EpochRecord> h{{1, 2.5, 2.0, 5.0, 0.69, 0.5, 0.0, 0.003}};
    write_history_csv(path, h);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "epoch,J,L,Q,D,disc_accuracy,mu,lr");
    EXPECT_EQ(row.substr(0, 6), "1,2.5,");
    std::filesystem::remove(path);
}

TEST(Trainer, DivergenceAbortsWithDump) {
    const auto data = small_data();
    const auto target = data.target.without_labels();
    TrainConfig cfg = small_config(Variant::kTah);
    cfg.lr.base = 1e30;
    Trainer t(cfg, data.source, target);
    try {
        t.run(10);
        FAIL() << "expected abort";
    } catch (const TrainingAborted& e) {
        EXPECT_NE(e.dump().find("pair,left,right,s"), std::string::npos);
        EXPECT_NE(e.dump().find("step="), std::string::npos);
    }
}
