#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hamball/matrix.hpp"

namespace hamball {

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1, kTanh = 2, kSigmoid = 3 };

const char* to_string(Activation a);

// y = act(x W + b), W stored in x out.
struct DenseLayer {
    Matrix weight;
    std::vector<double> bias;
    Activation activation = Activation::kIdentity;
    double lr_mult = 1.0;

    std::size_t in_dim() const { return weight.rows(); }
    std::size_t out_dim() const { return weight.cols(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct LayerSpec {
    std::size_t out_dim;
    Activation activation;
    double lr_mult = 1.0;
};

class Mlp;

// Intermediates of a forward pass, consumed by Mlp::backward.
struct ForwardCache {
    const Mlp* owner = nullptr;
    std::uint64_t generation = 0;
    std::vector<Matrix> inputs;   // input to each layer
    std::vector<Matrix> outputs;  // post-activation output of each layer
};

struct MlpGrads {
    std::vector<Matrix> weight;
    std::vector<std::vector<double>> bias;
    Matrix input;  // gradient w.r.t. the forward input

    // Flat views in the order of Mlp::parameters().
    std::vector<std::span<const double>> views() const;
    void add_scaled(const MlpGrads& other, double scale);
};

/**
 * Fully connected stack with per-layer activation. Parameters are mutated
 * only through parameters(), which also invalidates outstanding caches.
 */
class Mlp {
public:
    Mlp() = default;
    Mlp(std::size_t input_dim, std::span<const LayerSpec> specs, std::uint64_t seed);
    explicit Mlp(std::vector<DenseLayer> layers);

    std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }
    std::size_t num_parameters() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }

    Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const;
    // Throws std::logic_error when the cache came from another model or an older parameter state.
    MlpGrads backward(const ForwardCache& cache, const Matrix& grad_out) const;

    // Mutable parameter views (weights then bias per layer) with their lr multipliers.
    std::vector<std::span<double>> parameters();
    std::vector<double> lr_multipliers() const;
    std::uint64_t generation() const { return generation_; }

    friend bool operator==(const Mlp& a, const Mlp& b);

private:
    std::vector<DenseLayer> layers_;
    std::uint64_t generation_ = 0;
};

/**
 * Hash network head: feature -> hidden rectifier layers -> b tanh units.
 * The hash layer trains at `hash_lr_mult` times the base rate.
 */
class HashModel {
public:
    HashModel() = default;
    HashModel(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t bits, std::uint64_t seed,
              double hash_lr_mult = 10.0);
    explicit HashModel(Mlp net);

    std::size_t input_dim() const { return net_.input_dim(); }
    std::size_t bits() const { return net_.output_dim(); }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    // Relaxed codes, one row per input row, all components in [-1, 1].
    Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const;
    MlpGrads backward(const ForwardCache& cache, const Matrix& grad_z) const { return net_.backward(cache, grad_z); }

    friend bool operator==(const HashModel&, const HashModel&) = default;

private:
    Mlp net_;
};

// Domain classifier (b, H, ..., 1) with rectifier hidden units and sigmoid output.
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(std::size_t bits, std::span<const std::size_t> hidden, std::uint64_t seed, double lr_mult = 10.0);
    explicit Discriminator(Mlp net);

    std::size_t bits() const { return net_.input_dim(); }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    // Probability of the target domain, one entry per row.
    std::vector<double> forward(const Matrix& z, ForwardCache* cache = nullptr) const;
    MlpGrads backward(const ForwardCache& cache, std::span<const double> grad_p) const;

    friend bool operator==(const Discriminator&, const Discriminator&) = default;

private:
    Mlp net_;
};

// -mu * grad, the backward pass of the gradient reversal layer.
Matrix reverse_gradient(const Matrix& grad, double mu);

// Momentum SGD with L2 weight decay:
//   v <- momentum * v - lr * lr_mult * (g + decay * p);  p <- p + v
struct SgdState {
    double momentum = 0.9;
    double weight_decay = 0.0005;
    std::vector<std::vector<double>> velocity;
};

void sgd_step(SgdState& state, std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
              std::span<const double> lr_mult, double lr);
void sgd_step(SgdState& state, Mlp& net, const MlpGrads& grads, double lr);

// Checkpoint: "HMC1", u32 version, u32 input_dim, u32 num_layers, then per
// layer {u32 out_dim, u8 activation, f64 lr_mult}, then per layer the weight
// (row-major, in x out) and bias as little-endian f64.
void save_mlp(const std::string& path, const Mlp& net);
Mlp load_mlp(const std::string& path);

}  // namespace hamball
