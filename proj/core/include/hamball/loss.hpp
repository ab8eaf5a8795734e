#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hamball/matrix.hpp"

namespace hamball {

struct LossConfig {
    std::size_t bits = 16;
    double alpha = 0.125;   // sharpness of tanh(alpha * sim)
    double lambda = 0.1;    // quantization weight
    double mu_max = 1.0;    // adversarial weight ceiling
    // false selects the unsquared Euclidean norm inside the t-similarity
    bool squared_norm = true;

    void validate() const;
};

// 1/8 up to 32 bits, 1/16 above; keeps alpha * sim inside tanh's responsive range.
double default_alpha(std::size_t bits);

/**
 * Mini-batch of relaxed code pairs. Row k of zi and zj form one pair with
 * label s[k] (1 = similar, 0 = dissimilar).
 */
struct PairBatch {
    Matrix zi;
    Matrix zj;
    std::vector<int> s;

    std::size_t size() const { return s.size(); }
    void validate() const;
};

struct PairLoss {
    double loss = 0.0;
    Matrix grad_zi;
    Matrix grad_zj;
};

struct MatrixLoss {
    double loss = 0.0;
    Matrix grad;
};

struct VectorLoss {
    double loss = 0.0;
    std::vector<double> grad;
};

// b / (1 + ||zi - zj||^2).
double t_similarity(std::span<const double> zi, std::span<const double> zj, std::size_t bits);
// b / (1 + ||zi - zj||), the literal unsquared reading.
double t_similarity_unsquared(std::span<const double> zi, std::span<const double> zj, std::size_t bits);

// tanh(alpha * sim)
double probability(double sim, double alpha);

// Negative log-likelihood of one label under p(s=1) = tanh(alpha * sim).
double pair_nll_scalar(double sim, int s, double alpha);
// d(pair_nll_scalar)/d(sim)
double pair_nll_scalar_grad(double sim, int s, double alpha);

/**
 * Pairwise t-distribution cross-entropy, summed over the batch:
 *   log((1 + e^{2 a sim}) / 2) - s log((e^{2 a sim} - 1) / 2)
 * which is -log p(s | zi, zj). Gradients flow through sim's distance form.
 * Throws NumericalError on non-finite input.
 */
PairLoss pair_nll(const PairBatch& batch, const LossConfig& cfg);

// Logistic inner-product loss log(1 + e^{a<zi,zj>}) - s a <zi,zj>, summed.
// Used by the TAH-t ablation in place of pair_nll.
PairLoss inner_product_nll(const PairBatch& batch, double alpha);
// sigmoid(alpha * <zi,zj>)
double inner_product_probability(std::span<const double> zi, std::span<const double> zj, double alpha);

// sum over rows of || |z| - 1 ||_1 with subgradient -sign(z), sign(0) = 0.
MatrixLoss quantization_loss(const Matrix& z);

inline constexpr double kProbClamp = 1e-7;

// Mean binary cross-entropy of discriminator outputs p against domain labels d.
// p is clamped to [1e-7, 1 - 1e-7]; values outside [0, 1] are an error.
VectorLoss domain_bce(std::span<const double> p, std::span<const int> d);

}  // namespace hamball
