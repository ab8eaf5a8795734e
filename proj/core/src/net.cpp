#include "hamball/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hamball/binary_io.hpp"
#include "hamball/error.hpp"

namespace hamball {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::kIdentity: return "identity";
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
        case Activation::kSigmoid: return "sigmoid";
    }
    return "unknown";
}

namespace {

double activate(Activation a, double x) {
    switch (a) {
        case Activation::kIdentity: return x;
        case Activation::kRelu: return x > 0.0 ? x : 0.0;
        case Activation::kTanh: return std::tanh(x);
        case Activation::kSigmoid:
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            return std::exp(x) / (1.0 + std::exp(x));
    }
    return x;
}

// Derivative expressed through the activation output y.
double activation_grad(Activation a, double y) {
    switch (a) {
        case Activation::kIdentity: return 1.0;
        case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::kTanh: return 1.0 - y * y;
        case Activation::kSigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

}  // namespace

std::vector<std::span<const double>> MlpGrads::views() const {
    std::vector<std::span<const double>> out;
    for (std::size_t l = 0; l < weight.size(); ++l) {
        out.emplace_back(weight[l].data());
        out.emplace_back(bias[l]);
    }
    return out;
}

void MlpGrads::add_scaled(const MlpGrads& other, double scale) {
    if (other.weight.size() != weight.size()) throw UsageError("MlpGrads::add_scaled: layer count mismatch");
    for (std::size_t l = 0; l < weight.size(); ++l) {
        auto& w = weight[l].data();
        const auto& ow = other.weight[l].data();
        if (w.size() != ow.size() || bias[l].size() != other.bias[l].size()) {
            throw UsageError("MlpGrads::add_scaled: shape mismatch");
        }
        for (std::size_t k = 0; k < w.size(); ++k) w[k] += scale * ow[k];
        for (std::size_t k = 0; k < bias[l].size(); ++k) bias[l][k] += scale * other.bias[l][k];
    }
}

Mlp::Mlp(std::size_t input_dim, std::span<const LayerSpec> specs, std::uint64_t seed) {
    if (input_dim == 0 || specs.empty()) throw UsageError("Mlp: need a positive input dim and at least one layer");
    std::mt19937_64 rng(seed);
    std::size_t fan_in = input_dim;
    for (const auto& spec : specs) {
        if (spec.out_dim == 0) throw UsageError("Mlp: layer width must be positive");
        DenseLayer layer;
        layer.weight = Matrix(fan_in, spec.out_dim);
        layer.bias.assign(spec.out_dim, 0.0);
        layer.activation = spec.activation;
        layer.lr_mult = spec.lr_mult;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + spec.out_dim));
        std::uniform_real_distribution<double> init(-limit, limit);
        for (double& w : layer.weight.data()) w = init(rng);
        layers_.push_back(std::move(layer));
        fan_in = spec.out_dim;
    }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].bias.size() != layers_[l].out_dim()) throw UsageError("Mlp: bias length mismatch");
        if (l > 0 && layers_[l].in_dim() != layers_[l - 1].out_dim()) {
            throw UsageError("Mlp: layer " + std::to_string(l) + " input dim does not chain");
        }
    }
}

std::size_t Mlp::num_parameters() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

Matrix Mlp::forward(const Matrix& x, ForwardCache* cache) const {
    if (layers_.empty()) throw UsageError("Mlp::forward: empty network");
    if (x.cols() != input_dim()) {
        throw UsageError("Mlp::forward: input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(input_dim()));
    }
    if (cache) {
        cache->owner = this;
        cache->generation = generation_;
        cache->inputs.clear();
        cache->outputs.clear();
    }
    Matrix h = x;
    for (const auto& layer : layers_) {
        Matrix y = matmul(h, layer.weight);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            auto row = y.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) row[c] = activate(layer.activation, row[c] + layer.bias[c]);
        }
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->outputs.push_back(y);
        }
        h = std::move(y);
    }
    return h;
}

MlpGrads Mlp::backward(const ForwardCache& cache, const Matrix& grad_out) const {
    if (cache.owner != this || cache.generation != generation_ || cache.inputs.size() != layers_.size()) {
        throw std::logic_error("Mlp::backward: stale or foreign forward cache");
    }
    if (!grad_out.same_shape(cache.outputs.back())) throw UsageError("Mlp::backward: gradient shape mismatch");

    MlpGrads g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());
    Matrix delta = grad_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        const Matrix& y = cache.outputs[l];
        for (std::size_t k = 0; k < delta.size(); ++k) {
            delta.data()[k] *= activation_grad(layer.activation, y.data()[k]);
        }
        g.weight[l] = matmul_tn(cache.inputs[l], delta);
        g.bias[l].assign(layer.out_dim(), 0.0);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            const auto row = delta.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) g.bias[l][c] += row[c];
        }
        delta = matmul_nt(delta, layer.weight);
    }
    g.input = std::move(delta);
    return g;
}

std::vector<std::span<double>> Mlp::parameters() {
    ++generation_;
    std::vector<std::span<double>> out;
    for (auto& l : layers_) {
        out.emplace_back(l.weight.data());
        out.emplace_back(l.bias);
    }
    return out;
}

std::vector<double> Mlp::lr_multipliers() const {
    std::vector<double> out;
    for (const auto& l : layers_) {
        out.push_back(l.lr_mult);
        out.push_back(l.lr_mult);
    }
    return out;
}

bool operator==(const Mlp& a, const Mlp& b) { return a.layers_ == b.layers_; }

namespace {

std::vector<LayerSpec> hash_specs(std::span<const std::size_t> hidden, std::size_t bits, double hash_lr_mult) {
    std::vector<LayerSpec> specs;
    for (std::size_t h : hidden) specs.push_back({h, Activation::kRelu, 1.0});
    specs.push_back({bits, Activation::kTanh, hash_lr_mult});
    return specs;
}

std::vector<LayerSpec> disc_specs(std::span<const std::size_t> hidden, double lr_mult) {
    std::vector<LayerSpec> specs;
    for (std::size_t h : hidden) specs.push_back({h, Activation::kRelu, lr_mult});
    specs.push_back({1, Activation::kSigmoid, lr_mult});
    return specs;
}

}  // namespace

HashModel::HashModel(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t bits, std::uint64_t seed,
                     double hash_lr_mult)
    : net_(input_dim, hash_specs(hidden, bits, hash_lr_mult), seed) {}

HashModel::HashModel(Mlp net) : net_(std::move(net)) {
    if (net_.layers().empty() || net_.layers().back().activation != Activation::kTanh) {
        throw UsageError("HashModel: final layer must use tanh");
    }
}

Matrix HashModel::forward(const Matrix& x, ForwardCache* cache) const { return net_.forward(x, cache); }

Discriminator::Discriminator(std::size_t bits, std::span<const std::size_t> hidden, std::uint64_t seed, double lr_mult)
    : net_(bits, disc_specs(hidden, lr_mult), seed) {}

Discriminator::Discriminator(Mlp net) : net_(std::move(net)) {
    if (net_.layers().empty() || net_.output_dim() != 1 || net_.layers().back().activation != Activation::kSigmoid) {
        throw UsageError("Discriminator: final layer must be a single sigmoid unit");
    }
}

std::vector<double> Discriminator::forward(const Matrix& z, ForwardCache* cache) const {
    return net_.forward(z, cache).data();
}

MlpGrads Discriminator::backward(const ForwardCache& cache, std::span<const double> grad_p) const {
    Matrix g(grad_p.size(), 1, std::vector<double>(grad_p.begin(), grad_p.end()));
    return net_.backward(cache, g);
}

Matrix reverse_gradient(const Matrix& grad, double mu) {
    if (!(mu >= 0.0)) throw UsageError("reverse_gradient: mu must be >= 0");
    Matrix out = grad;
    for (double& v : out.data()) v = v == 0.0 ? 0.0 : -mu * v;
    return out;
}

void sgd_step(SgdState& state, std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
              std::span<const double> lr_mult, double lr) {
    if (params.size() != grads.size() || params.size() != lr_mult.size()) {
        throw UsageError("sgd_step: parameter, gradient and multiplier counts differ");
    }
    if (state.velocity.empty()) {
        for (const auto& p : params) state.velocity.emplace_back(p.size(), 0.0);
    }
    if (state.velocity.size() != params.size()) throw UsageError("sgd_step: velocity does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || params[i].size() != state.velocity[i].size()) {
            throw UsageError("sgd_step: shape mismatch in parameter " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i];
        auto g = grads[i];
        auto& v = state.velocity[i];
        const double rate = lr * lr_mult[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            v[k] = state.momentum * v[k] - rate * (g[k] + state.weight_decay * p[k]);
            p[k] += v[k];
        }
    }
}

void sgd_step(SgdState& state, Mlp& net, const MlpGrads& grads, double lr) {
    const auto mults = net.lr_multipliers();
    const auto views = grads.views();
    const auto params = net.parameters();
    sgd_step(state, params, views, mults, lr);
}

void save_mlp(const std::string& path, const Mlp& net) {
    io::Writer w(path);
    w.magic("HMC1");
    w.put<std::uint32_t>(1);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(net.input_dim()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers().size()));
    for (const auto& l : net.layers()) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(l.out_dim()));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.activation));
        w.put<double>(l.lr_mult);
    }
    for (const auto& l : net.layers()) {
        w.raw(l.weight.data().data(), l.weight.size() * sizeof(double));
        w.raw(l.bias.data(), l.bias.size() * sizeof(double));
    }
    w.close();
}

Mlp load_mlp(const std::string& path) {
    io::Reader r(path);
    r.expect_magic("HMC1");
    std::size_t at = r.offset();
    const auto version = r.get<std::uint32_t>("version");
    if (version != 1) r.fail("version", "unsupported version " + std::to_string(version), at);
    at = r.offset();
    const auto input_dim = r.get<std::uint32_t>("input_dim");
    if (input_dim == 0) r.fail("input_dim", "zero input dimension", at);
    at = r.offset();
    const auto num_layers = r.get<std::uint32_t>("num_layers");
    if (num_layers == 0 || num_layers > 64) r.fail("num_layers", "implausible layer count", at);

    std::vector<DenseLayer> layers(num_layers);
    std::size_t fan_in = input_dim;
    for (auto& l : layers) {
        at = r.offset();
        const auto out_dim = r.get<std::uint32_t>("out_dim");
        if (out_dim == 0) r.fail("out_dim", "zero layer width", at);
        at = r.offset();
        const auto act = r.get<std::uint8_t>("activation");
        if (act > static_cast<std::uint8_t>(Activation::kSigmoid)) r.fail("activation", "unknown activation", at);
        l.activation = static_cast<Activation>(act);
        l.lr_mult = r.get<double>("lr_mult");
        l.weight = Matrix(fan_in, out_dim);
        l.bias.assign(out_dim, 0.0);
        fan_in = out_dim;
    }
    for (auto& l : layers) {
        r.raw(l.weight.data().data(), l.weight.size() * sizeof(double), "weight");
        r.raw(l.bias.data(), l.bias.size() * sizeof(double), "bias");
    }
    r.expect_end();
    return Mlp(std::move(layers));
}

}  // namespace hamball
