#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hamball/error.hpp"
#include "hamball/net.hpp"
#include "test_support.hpp"

using namespace hamball;
using hamball::testing::max_fd_error;
using hamball::testing::random_matrix;

namespace {

// Sum of w .* output: a scalar objective whose gradient w.r.t. the output is w.
double weighted_sum(const Matrix& out, const Matrix& w) {
    double s = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) s += out.data()[k] * w.data()[k];
    return s;
}

Mlp zero_mlp(std::size_t in, std::size_t out, Activation act) {
    DenseLayer l;
    l.weight = Matrix(in, out, 0.0);
    l.bias.assign(out, 0.0);
    l.activation = act;
    return Mlp({l});
}

// Central differences straddling a rectifier kink are meaningless, so such draws are skipped.
bool near_relu_kink(const Mlp& net, const ForwardCache& cache, double margin) {
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& layer = net.layers()[l];
        if (layer.activation != Activation::kRelu) continue;
        const Matrix pre = matmul(cache.inputs[l], layer.weight);
        for (std::size_t r = 0; r < pre.rows(); ++r) {
            for (std::size_t c = 0; c < pre.cols(); ++c) {
                if (std::abs(pre(r, c) + layer.bias[c]) < margin) return true;
            }
        }
    }
    return false;
}

}  // namespace

TEST(HashModel, ZeroWeightsGiveZeroCodes) {
    const HashModel m(zero_mlp(5, 12, Activation::kTanh));
    std::mt19937_64 rng(1);
    EXPECT_EQ(m.forward(random_matrix(4, 5, rng)), Matrix(4, 12, 0.0));
}

TEST(HashModel, IdentityLayerIsElementwiseTanh) {
    DenseLayer l;
    l.weight = Matrix(3, 3, 0.0);
    for (std::size_t k = 0; k < 3; ++k) l.weight(k, k) = 1.0;
    l.bias.assign(3, 0.0);
    l.activation = Activation::kTanh;
    const HashModel m(Mlp({l}));
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(6, 3, rng, -3.0, 3.0);
    const Matrix z = m.forward(x);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_DOUBLE_EQ(z.data()[k], std::tanh(x.data()[k]));
}

TEST(HashModel, ForwardIsDeterministicAndBounded) {
    const std::vector<std::size_t> hidden{32, 16};
    const HashModel m(10, hidden, 24, 99);
    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(50, 10, rng, -20.0, 20.0);
    const Matrix a = m.forward(x);
    EXPECT_EQ(a, m.forward(x));
    for (double v : a.data()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(m.bits(), 24u);
}

TEST(HashModel, DimensionMismatchIsUsageError) {
    const std::vector<std::size_t> hidden{8};
    const HashModel m(10, hidden, 4, 1);
    EXPECT_THROW(m.forward(Matrix(2, 11)), UsageError);
    EXPECT_THROW(HashModel(zero_mlp(3, 3, Activation::kRelu)), UsageError);
}

TEST(HashModel, ZeroUpstreamGradientGivesZeroParameterGradients) {
    const std::vector<std::size_t> hidden{16};
    const HashModel m(6, hidden, 8, 5);
    std::mt19937_64 rng(4);
    ForwardCache cache;
    const Matrix z = m.forward(random_matrix(5, 6, rng), &cache);
    const auto g = m.backward(cache, Matrix(z.rows(), z.cols(), 0.0));
    for (const auto& view : g.views()) {
        for (double v : view) EXPECT_EQ(v, 0.0);
    }
}

TEST(HashModel, ScalarChainRuleByHand) {
    DenseLayer l;
    l.weight = Matrix(1, 1, std::vector<double>{0.8});
    l.bias = {-0.1};
    l.activation = Activation::kTanh;
    const HashModel m(Mlp({l}));
    ForwardCache cache;
    m.forward(Matrix(1, 1, std::vector<double>{0.5}), &cache);
    const auto g = m.backward(cache, Matrix(1, 1, std::vector<double>{1.0}));
    // z = tanh(0.8 * 0.5 - 0.1); dz/dw = (1 - z^2) x, dz/db = 1 - z^2, dz/dx = (1 - z^2) w
    EXPECT_NEAR(g.weight[0](0, 0), 0.4575684809133146, 1e-15);
    EXPECT_NEAR(g.bias[0][0], 0.9151369618266292, 1e-15);
    EXPECT_NEAR(g.input(0, 0), 0.7321095694613033, 1e-15);
}

TEST(HashModel, StaleCacheIsRejected) {
    const std::vector<std::size_t> hidden{4};
    HashModel m(3, hidden, 2, 7);
    ForwardCache cache;
    const Matrix z = m.forward(Matrix(1, 3, 0.5), &cache);
    m.net().parameters();  // any mutation invalidates
    EXPECT_THROW(m.backward(cache, Matrix(1, 2, 1.0)), std::logic_error);
    const HashModel other(3, hidden, 2, 8);
    ForwardCache foreign;
    other.forward(Matrix(1, 3, 0.5), &foreign);
    EXPECT_THROW(m.backward(foreign, Matrix(1, 2, 1.0)), std::logic_error);
}

// Finite differences over every parameter and the input, for each nonlinearity.
TEST(Mlp, BackwardMatchesFiniteDifferencesForAllActivations) {
    std::mt19937_64 rng(10);
    double worst = 0.0;
    int instances = 0;
    const Activation acts[] = {Activation::kIdentity, Activation::kRelu, Activation::kTanh, Activation::kSigmoid};
    for (Activation hidden_act : acts) {
        for (Activation out_act : acts) {
            for (int t = 0; t < 7; ++t) {
                const LayerSpec specs[] = {{7, hidden_act}, {5, hidden_act}, {3, out_act}};
                Mlp net(4, specs, rng());
                Matrix x = random_matrix(6, 4, rng, -2.0, 2.0);
                double inst = 0.0;
                const Matrix w = random_matrix(6, 3, rng);
                ForwardCache cache;
                net.forward(x, &cache);
                const auto g = net.backward(cache, w);
                auto objective = [&] { return weighted_sum(net.forward(x), w); };
                auto params = net.parameters();
                const auto grads = g.views();
                for (std::size_t p = 0; p < params.size(); ++p) {
                    std::vector<double> values(params[p].begin(), params[p].end());
                    std::vector<double> analytic(grads[p].begin(), grads[p].end());
                    inst = std::max(inst, max_fd_error(values, analytic, [&] {
                                         std::copy(values.begin(), values.end(), params[p].begin());
                                         return objective();
                                     }));
                    std::copy(values.begin(), values.end(), params[p].begin());
                }
                inst = std::max(inst, max_fd_error(x.data(), g.input.data(), objective));
                if (near_relu_kink(net, cache, 1e-3)) continue;
                worst = std::max(worst, inst);
                ++instances;
            }
        }
    }
    EXPECT_GE(instances, 100);
    EXPECT_LT(worst, 1e-4);
}

TEST(Discriminator, OutputsAreProbabilities) {
    const std::vector<std::size_t> hidden{16, 16};
    const Discriminator d(8, hidden, 3);
    std::mt19937_64 rng(11);
    const auto p = d.forward(random_matrix(40, 8, rng, -1.0, 1.0));
    ASSERT_EQ(p.size(), 40u);
    for (double v : p) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Discriminator, ZeroGradientAndScalarHandCheck) {
    const std::vector<std::size_t> hidden{4};
    const Discriminator d(3, hidden, 4);
    ForwardCache cache;
    std::mt19937_64 rng(12);
    d.forward(random_matrix(2, 3, rng), &cache);
    const std::vector<double> zero(2, 0.0);
    const auto zero_grads = d.backward(cache, zero);
    for (const auto& view : zero_grads.views()) {
        for (double v : view) EXPECT_EQ(v, 0.0);
    }

    // p = sigmoid(w z + b) with w = 2, b = 0.5, z = 0.25: dp/dw = p (1 - p) z
    DenseLayer l;
    l.weight = Matrix(1, 1, std::vector<double>{2.0});
    l.bias = {0.5};
    l.activation = Activation::kSigmoid;
    const Discriminator scalar(Mlp({l}));
    ForwardCache sc;
    const auto p = scalar.forward(Matrix(1, 1, std::vector<double>{0.25}), &sc);
    const double expected_p = 1.0 / (1.0 + std::exp(-1.0));
    EXPECT_NEAR(p[0], expected_p, 1e-15);
    const std::vector<double> one{1.0};
    const auto g = scalar.backward(sc, one);
    EXPECT_NEAR(g.weight[0](0, 0), expected_p * (1 - expected_p) * 0.25, 1e-15);
    EXPECT_NEAR(g.input(0, 0), expected_p * (1 - expected_p) * 2.0, 1e-15);
}

TEST(ReverseGradient, Values) {
    const Matrix g(1, 2, std::vector<double>{2.0, -4.0});
    EXPECT_EQ(reverse_gradient(g, 0.0), Matrix(1, 2, 0.0));
    EXPECT_EQ(reverse_gradient(g, 1.0).data(), (std::vector<double>{-2.0, 4.0}));
    EXPECT_EQ(reverse_gradient(g, 0.5).data(), (std::vector<double>{-1.0, 2.0}));
    EXPECT_THROW(reverse_gradient(g, -1.0), UsageError);
}

TEST(Sgd, ZeroGradientZeroVelocityLeavesParamsUnchanged) {
    SgdState state;
    state.weight_decay = 0.0;
    std::vector<double> p{1.5, -2.0};
    const std::vector<double> g{0.0, 0.0};
    const std::vector<std::span<double>> params{p};
    const std::vector<std::span<const double>> grads{g};
    const std::vector<double> mult{1.0};
    sgd_step(state, params, grads, mult, 0.1);
    EXPECT_EQ(p, (std::vector<double>{1.5, -2.0}));
}

TEST(Sgd, TwoScalarStepsByHand) {
    SgdState state;
    std::vector<double> p{1.0};
    const std::vector<double> g{0.5};
    const std::vector<std::span<double>> params{p};
    const std::vector<std::span<const double>> grads{g};
    const std::vector<double> mult{1.0};
    sgd_step(state, params, grads, mult, 0.1);
    EXPECT_NEAR(p[0], 0.94995, 1e-15);
    sgd_step(state, params, grads, mult, 0.1);
    EXPECT_NEAR(p[0], 0.8548575025, 1e-15);
    EXPECT_NEAR(state.velocity[0][0], -0.0950924975, 1e-15);
}

TEST(Sgd, WeightDecayShrinksTowardZero) {
    SgdState state;
    std::vector<double> p{2.0, -3.0};
    const std::vector<double> g{0.0, 0.0};
    const std::vector<std::span<double>> params{p};
    const std::vector<std::span<const double>> grads{g};
    const std::vector<double> mult{1.0};
    for (int i = 0; i < 5; ++i) {
        const auto before = p;
        sgd_step(state, params, grads, mult, 0.5);
        EXPECT_LT(std::abs(p[0]), std::abs(before[0]));
        EXPECT_LT(std::abs(p[1]), std::abs(before[1]));
    }
}

TEST(Sgd, ShapeMismatchIsUsageError) {
    SgdState state;
    std::vector<double> p{1.0, 2.0};
    const std::vector<double> g{0.5};
    const std::vector<std::span<double>> params{p};
    const std::vector<std::span<const double>> grads{g};
    const std::vector<double> mult{1.0};
    EXPECT_THROW(sgd_step(state, params, grads, mult, 0.1), UsageError);
}

TEST(Sgd, LayerMultiplierScalesStep) {
    const std::vector<std::size_t> hidden{4};
    HashModel m(3, hidden, 2, 1, 10.0);
    EXPECT_EQ(m.net().lr_multipliers(), (std::vector<double>{1.0, 1.0, 10.0, 10.0}));
}

TEST(Checkpoint, RoundTripAndCorruption) {
    const auto dir = std::filesystem::temp_directory_path() / "hamball_net_test";
    std::filesystem::create_directories(dir);
    const std::vector<std::size_t> hidden{9, 5};
    const HashModel m(7, hidden, 12, 3);
    const auto path = (dir / "m.bin").string();
    save_mlp(path, m.net());
    EXPECT_EQ(HashModel(load_mlp(path)), m);

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    try {
        load_mlp(path);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
