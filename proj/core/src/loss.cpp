#include "hamball/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hamball/error.hpp"

namespace hamball {

namespace {

void require_finite(const Matrix& m, const char* what) {
    if (!m.all_finite()) throw NumericalError(std::string(what) + ": non-finite input");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void LossConfig::validate() const {
    if (bits == 0) throw UsageError("LossConfig: bits must be positive");
    if (!(alpha > 0.0)) throw UsageError("LossConfig: alpha must be > 0");
    if (!(lambda >= 0.0)) throw UsageError("LossConfig: lambda must be >= 0");
    if (!(mu_max >= 0.0)) throw UsageError("LossConfig: mu_max must be >= 0");
}

double default_alpha(std::size_t bits) { return bits <= 32 ? 1.0 / 8.0 : 1.0 / 16.0; }

void PairBatch::validate() const {
    if (!zi.same_shape(zj)) throw UsageError("PairBatch: zi and zj shapes differ");
    if (zi.rows() != s.size()) throw UsageError("PairBatch: label count does not match pair count");
    for (int v : s) {
        if (v != 0 && v != 1) throw UsageError("PairBatch: labels must be 0 or 1");
    }
}

double t_similarity(std::span<const double> zi, std::span<const double> zj, std::size_t bits) {
    if (zi.size() != zj.size()) throw UsageError("t_similarity: length mismatch");
    return static_cast<double>(bits) / (1.0 + squared_distance(zi, zj));
}

double t_similarity_unsquared(std::span<const double> zi, std::span<const double> zj, std::size_t bits) {
    if (zi.size() != zj.size()) throw UsageError("t_similarity: length mismatch");
    return static_cast<double>(bits) / (1.0 + std::sqrt(squared_distance(zi, zj)));
}

double probability(double sim, double alpha) { return std::tanh(alpha * sim); }

double pair_nll_scalar(double sim, int s, double alpha) {
    // With y = alpha * sim:
    //   log((1 + e^{2y}) / 2)  = softplus(2y) - log 2
    //   log((e^{2y} - 1) / 2)  = 2y + log(-expm1(-2y)) - log 2
    // For s = 1 the 2y and log 2 parts cancel exactly, leaving -log tanh(y).
    const double y = alpha * sim;
    if (s == 0) return softplus(2.0 * y) - std::numbers::ln2;
    return std::log1p(std::exp(-2.0 * y)) - std::log(-std::expm1(-2.0 * y));
}

double pair_nll_scalar_grad(double sim, int s, double alpha) {
    const double y = alpha * sim;
    // d/dy softplus(2y) = 2 sigmoid(2y); d/dy log(e^{2y} - 1) = -2 / expm1(-2y)
    double dy = 2.0 * sigmoid(2.0 * y);
    if (s == 1) dy += 2.0 / std::expm1(-2.0 * y);
    return alpha * dy;
}

PairLoss pair_nll(const PairBatch& batch, const LossConfig& cfg) {
    batch.validate();
    require_finite(batch.zi, "pair_nll");
    require_finite(batch.zj, "pair_nll");
    const std::size_t n = batch.size();
    const std::size_t b = batch.zi.cols();
    const double bits = static_cast<double>(cfg.bits);

    PairLoss out{0.0, Matrix(n, b), Matrix(n, b)};
    for (std::size_t k = 0; k < n; ++k) {
        const auto zi = batch.zi.row(k);
        const auto zj = batch.zj.row(k);
        const double sq = squared_distance(zi, zj);
        const double dist = cfg.squared_norm ? sq : std::sqrt(sq);
        const double sim = bits / (1.0 + dist);
        out.loss += pair_nll_scalar(sim, batch.s[k], cfg.alpha);

        // dL/d(dist) then d(dist)/dzi = 2 (zi - zj) for the squared form,
        // (zi - zj) / ||zi - zj|| for the unsquared form (0 at coincidence).
        const double dl_dsim = pair_nll_scalar_grad(sim, batch.s[k], cfg.alpha);
        const double dl_ddist = -dl_dsim * bits / ((1.0 + dist) * (1.0 + dist));
        double scale;
        if (cfg.squared_norm) {
            scale = 2.0 * dl_ddist;
        } else {
            scale = dist > 0.0 ? dl_ddist / dist : 0.0;
        }
        auto gi = out.grad_zi.row(k);
        auto gj = out.grad_zj.row(k);
        for (std::size_t c = 0; c < b; ++c) {
            const double g = scale * (zi[c] - zj[c]);
            gi[c] = g;
            gj[c] = -g;
        }
    }
    if (!std::isfinite(out.loss)) throw NumericalError("pair_nll: non-finite loss");
    return out;
}

double inner_product_probability(std::span<const double> zi, std::span<const double> zj, double alpha) {
    double ip = 0.0;
    for (std::size_t k = 0; k < zi.size(); ++k) ip += zi[k] * zj[k];
    return sigmoid(alpha * ip);
}

PairLoss inner_product_nll(const PairBatch& batch, double alpha) {
    batch.validate();
    require_finite(batch.zi, "inner_product_nll");
    require_finite(batch.zj, "inner_product_nll");
    const std::size_t n = batch.size();
    const std::size_t b = batch.zi.cols();
    PairLoss out{0.0, Matrix(n, b), Matrix(n, b)};
    for (std::size_t k = 0; k < n; ++k) {
        const auto zi = batch.zi.row(k);
        const auto zj = batch.zj.row(k);
        double ip = 0.0;
        for (std::size_t c = 0; c < b; ++c) ip += zi[c] * zj[c];
        const double y = alpha * ip;
        out.loss += softplus(y) - batch.s[k] * y;
        const double dy = alpha * (sigmoid(y) - batch.s[k]);
        auto gi = out.grad_zi.row(k);
        auto gj = out.grad_zj.row(k);
        for (std::size_t c = 0; c < b; ++c) {
            gi[c] = dy * zj[c];
            gj[c] = dy * zi[c];
        }
    }
    if (!std::isfinite(out.loss)) throw NumericalError("inner_product_nll: non-finite loss");
    return out;
}

MatrixLoss quantization_loss(const Matrix& z) {
    require_finite(z, "quantization_loss");
    MatrixLoss out{0.0, Matrix(z.rows(), z.cols())};
    const auto& in = z.data();
    auto& g = out.grad.data();
    for (std::size_t k = 0; k < in.size(); ++k) {
        const double v = in[k];
        out.loss += std::abs(std::abs(v) - 1.0);
        // |z| <= 1 so the term is 1 - |z|
        g[k] = v > 0.0 ? -1.0 : (v < 0.0 ? 1.0 : 0.0);
    }
    return out;
}

VectorLoss domain_bce(std::span<const double> p, std::span<const int> d) {
    if (p.size() != d.size()) throw UsageError("domain_bce: prediction and label counts differ");
    if (p.empty()) throw UsageError("domain_bce: empty batch");
    const double n = static_cast<double>(p.size());
    VectorLoss out{0.0, std::vector<double>(p.size())};
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
            throw NumericalError("domain_bce: probability " + std::to_string(p[i]) + " outside [0, 1]");
        }
        if (d[i] != 0 && d[i] != 1) throw UsageError("domain_bce: domain labels must be 0 or 1");
        const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
        out.loss -= d[i] == 1 ? std::log(q) : std::log1p(-q);
        out.grad[i] = (q - d[i]) / (q * (1.0 - q) * n);
    }
    out.loss /= n;
    return out;
}

}  // namespace hamball
