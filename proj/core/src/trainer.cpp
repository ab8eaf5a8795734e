#include "hamball/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hamball {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::kTah: return "tah";
        case Variant::kTahT: return "tah-t";
        case Variant::kTahA: return "tah-a";
    }
    return "unknown";
}

Variant parse_variant(const std::string& s) {
    if (s == "tah" || s == "TAH") return Variant::kTah;
    if (s == "tah-t" || s == "TAH-t") return Variant::kTahT;
    if (s == "tah-a" || s == "TAH-A") return Variant::kTahA;
    throw UsageError("unknown variant '" + s + "' (expected tah, tah-t or tah-a)");
}

double MuSchedule::operator()(double progress) const {
    const double p = std::clamp(progress, 0.0, 1.0);
    if (gamma <= 0.0) return mu_max * p;
    auto ramp = [&](double x) { return 2.0 / (1.0 + std::exp(-gamma * x)) - 1.0; };
    return mu_max * ramp(p) / ramp(1.0);
}

double LrSchedule::operator()(double progress) const {
    return base / std::pow(1.0 + gamma * std::clamp(progress, 0.0, 1.0), power);
}

double TrainConfig::effective_alpha() const { return alpha > 0.0 ? alpha : 16.0 / static_cast<double>(bits); }

double TrainConfig::effective_ip_alpha() const { return ip_alpha > 0.0 ? ip_alpha : 0.5; }

LossConfig TrainConfig::loss_config() const {
    LossConfig c;
    c.bits = bits;
    c.alpha = effective_alpha();
    c.lambda = lambda;
    c.mu_max = mu.mu_max;
    c.squared_norm = squared_norm;
    return c;
}

void TrainConfig::validate() const {
    if (bits == 0 || bits > kMaxCodeBits) throw UsageError("TrainConfig: bits out of range");
    if (batch_size == 0) throw UsageError("TrainConfig: batch_size must be positive");
    if (!(similar_fraction > 0.0 && similar_fraction < 1.0)) {
        throw UsageError("TrainConfig: similar_fraction must lie in (0, 1)");
    }
    if (!(lr.base > 0.0)) throw UsageError("TrainConfig: learning rate must be positive");
    if (disc_hidden.empty()) throw UsageError("TrainConfig: discriminator needs at least one hidden layer");
    loss_config().validate();
}

PairIndices sample_pairs(std::span<const std::uint32_t> labels, std::size_t count, double similar_fraction,
                         std::mt19937_64& rng) {
    const std::size_t n = labels.size();
    if (n < 2) throw UsageError("sample_pairs: need at least two items");
    const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
    if (*lo == *hi) throw UsageError("sample_pairs: source has a single class; dissimilar pairs impossible");

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::bernoulli_distribution want_similar(similar_fraction);
    PairIndices out;
    out.left.reserve(count);
    out.right.reserve(count);
    out.s.reserve(count);
    constexpr std::size_t kMaxTries = 10000;
    while (out.size() < count) {
        const std::size_t i = pick(rng);
        const bool similar = want_similar(rng);
        for (std::size_t attempt = 0; attempt < kMaxTries; ++attempt) {
            const std::size_t j = pick(rng);
            if (j == i) continue;
            if ((labels[i] == labels[j]) == similar) {
                out.left.push_back(i);
                out.right.push_back(j);
                out.s.push_back(similar ? 1 : 0);
                break;
            }
        }
        // An anchor whose class is a singleton cannot form a similar pair; draw another anchor.
    }
    return out;
}

PairBatch sample_pair_batch(const FeatureDataset& source, const HashModel& model, std::size_t count,
                            double similar_fraction, std::mt19937_64& rng) {
    if (!source.labels) throw UsageError("sample_pair_batch: source dataset has no labels");
    auto idx = sample_pairs(*source.labels, count, similar_fraction, rng);
    PairBatch batch;
    batch.zi = model.forward(gather_rows(source.features, idx.left));
    batch.zj = model.forward(gather_rows(source.features, idx.right));
    batch.s = std::move(idx.s);
    return batch;
}

namespace {

MlpGrads zeros_like(const Mlp& net) {
    MlpGrads g;
    for (const auto& l : net.layers()) {
        g.weight.emplace_back(l.weight.rows(), l.weight.cols());
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

Matrix row_block(const Matrix& m, std::size_t begin, std::size_t end) {
    std::vector<double> data(m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols()),
                             m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols()));
    return Matrix(end - begin, m.cols(), std::move(data));
}

bool grads_finite(const MlpGrads& g) {
    for (const auto& w : g.weight) {
        if (!w.all_finite()) return false;
    }
    for (const auto& b : g.bias) {
        for (double v : b) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

}  // namespace

StepResult compute_step(const HashModel& model, const Discriminator& disc, const StepInputs& in,
                        const TrainConfig& cfg, double mu) {
    const std::size_t pairs = in.s.size();
    if (pairs == 0 || in.source_x.rows() != 2 * pairs) {
        throw UsageError("compute_step: source rows must be 2x the pair count");
    }
    const double inv_pairs = 1.0 / static_cast<double>(pairs);

    StepResult out;
    ForwardCache src_cache;
    const Matrix z_src = model.forward(in.source_x, &src_cache);
    PairBatch batch{row_block(z_src, 0, pairs), row_block(z_src, pairs, 2 * pairs), in.s};
    const PairLoss pl =
        cfg.variant == Variant::kTahT ? inner_product_nll(batch, cfg.effective_ip_alpha()) : pair_nll(batch, cfg.loss_config());
    const MatrixLoss ql = quantization_loss(z_src);

    out.l = pl.loss * inv_pairs;
    out.q = ql.loss * inv_pairs;
    out.j = out.l + cfg.lambda * out.q;

    Matrix grad_src = vstack(pl.grad_zi, pl.grad_zj);
    {
        auto& g = grad_src.data();
        const auto& qg = ql.grad.data();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = inv_pairs * (g[k] + cfg.lambda * qg[k]);
    }
    out.hash_pair = model.backward(src_cache, grad_src);

    out.adversarial = cfg.variant != Variant::kTahA && !in.target_x.empty();
    if (!out.adversarial) {
        out.hash_adv = zeros_like(model.net());
        out.disc = zeros_like(disc.net());
        out.disc_accuracy = std::numeric_limits<double>::quiet_NaN();
        out.d = std::numeric_limits<double>::quiet_NaN();
        return out;
    }

    ForwardCache tgt_cache;
    const Matrix z_tgt = model.forward(in.target_x, &tgt_cache);
    const Matrix z_dom = vstack(z_src, z_tgt);
    std::vector<int> domain(z_dom.rows(), 0);
    std::fill(domain.begin() + static_cast<std::ptrdiff_t>(z_src.rows()), domain.end(), 1);

    ForwardCache disc_cache;
    const auto p = disc.forward(z_dom, &disc_cache);
    const VectorLoss bce = domain_bce(p, domain);
    out.d = bce.loss;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < p.size(); ++i) correct += ((p[i] > 0.5) == (domain[i] == 1)) ? 1 : 0;
    out.disc_accuracy = static_cast<double>(correct) / static_cast<double>(p.size());

    out.disc = disc.backward(disc_cache, bce.grad);
    const Matrix reversed = reverse_gradient(out.disc.input, mu);
    out.hash_adv = model.backward(src_cache, row_block(reversed, 0, z_src.rows()));
    out.hash_adv.add_scaled(model.backward(tgt_cache, row_block(reversed, z_src.rows(), reversed.rows())), 1.0);
    return out;
}

Trainer::Trainer(TrainConfig cfg, const FeatureDataset& source, const UnlabeledFeatures& target)
    : cfg_(std::move(cfg)), source_(source), target_(target) {
    cfg_.validate();
    source_.validate();
    if (!source_.labels) throw UsageError("Trainer: source dataset must be labeled");
    if (cfg_.variant != Variant::kTahA) {
        if (target_.features.rows() == 0) throw UsageError("Trainer: adversarial variants need target features");
        if (target_.features.cols() != source_.dim()) throw UsageError("Trainer: source and target feature dims differ");
    }
    std::seed_seq seq{cfg_.seed, std::uint64_t{0x7a4}};
    rng_.seed(seq);
    const std::uint64_t hash_seed = rng_();
    const std::uint64_t disc_seed = rng_();
    model_ = HashModel(source_.dim(), cfg_.hidden, cfg_.bits, hash_seed, cfg_.hash_lr_mult);
    disc_ = Discriminator(cfg_.bits, cfg_.disc_hidden, disc_seed, cfg_.disc_lr_mult);
    hash_sgd_.momentum = disc_sgd_.momentum = cfg_.momentum;
    hash_sgd_.weight_decay = disc_sgd_.weight_decay = cfg_.weight_decay;
    steps_per_epoch_ = cfg_.steps_per_epoch > 0 ? cfg_.steps_per_epoch
                                                : std::max<std::size_t>(1, (source_.size() + cfg_.batch_size - 1) /
                                                                               cfg_.batch_size);
}

void Trainer::run_epoch() {
    const bool adversarial = cfg_.variant != Variant::kTahA;
    const std::size_t total = std::max<std::size_t>(1, total_steps());
    EpochRecord rec;
    rec.epoch = history_.size() + 1;
    std::uniform_int_distribution<std::size_t> pick_target(0, adversarial ? target_.features.rows() - 1 : 0);

    for (std::size_t s = 0; s < steps_per_epoch_; ++s, ++step_) {
        const double progress = static_cast<double>(step_) / static_cast<double>(total);
        const double mu = adversarial ? cfg_.mu(progress) : 0.0;
        const double lr = cfg_.lr(progress);

        const PairIndices idx = sample_pairs(*source_.labels, cfg_.batch_size, cfg_.similar_fraction, rng_);
        std::vector<std::size_t> rows = idx.left;
        rows.insert(rows.end(), idx.right.begin(), idx.right.end());
        StepInputs in{gather_rows(source_.features, rows), idx.s, {}};
        if (adversarial) {
            std::vector<std::size_t> trows(rows.size());
            for (auto& r : trows) r = pick_target(rng_);
            in.target_x = gather_rows(target_.features, trows);
        }

        auto abort = [&](const std::string& why, const StepResult* res) {
            std::ostringstream dump;
            dump << std::setprecision(17) << "epoch=" << rec.epoch << " step=" << step_;
            if (res) dump << " J=" << res->j << " L=" << res->l << " Q=" << res->q << " D=" << res->d;
            dump << " mu=" << mu << " lr=" << lr << "\n";
            dump << "pair,left,right,s\n";
            for (std::size_t k = 0; k < idx.size(); ++k) {
                dump << k << ',' << idx.left[k] << ',' << idx.right[k] << ',' << idx.s[k] << "\n";
            }
            throw TrainingAborted("training aborted at step " + std::to_string(step_) + ": " + why, dump.str());
        };

        StepResult res;
        try {
            res = compute_step(model_, disc_, in, cfg_, mu);
        } catch (const NumericalError& e) {
            abort(e.what(), nullptr);
        }
        res.hash_pair.add_scaled(res.hash_adv, 1.0);
        const bool finite = std::isfinite(res.j) && (!res.adversarial || std::isfinite(res.d)) &&
                            grads_finite(res.hash_pair) && grads_finite(res.disc);
        if (!finite) abort("non-finite loss or gradient", &res);

        sgd_step(hash_sgd_, model_.net(), res.hash_pair, lr);
        if (res.adversarial) sgd_step(disc_sgd_, disc_.net(), res.disc, lr);

        rec.j += res.j;
        rec.l += res.l;
        rec.q += res.q;
        rec.d += res.d;
        rec.disc_accuracy += res.disc_accuracy;
        rec.mu = mu;
        rec.lr = lr;
    }
    const double inv = 1.0 / static_cast<double>(steps_per_epoch_);
    rec.j *= inv;
    rec.l *= inv;
    rec.q *= inv;
    rec.d *= inv;
    rec.disc_accuracy *= inv;
    history_.push_back(rec);
}

void Trainer::run(std::size_t epochs) {
    for (std::size_t e = 0; e < epochs; ++e) run_epoch();
}

TrainResult train(const TrainConfig& cfg, const FeatureDataset& source, const UnlabeledFeatures& target) {
    Trainer t(cfg, source, target);
    t.run(cfg.epochs);
    return {t.model(), t.discriminator(), t.history()};
}

std::vector<BinaryCode> encode(const HashModel& model, const Matrix& features) {
    if (features.cols() != model.input_dim()) {
        throw UsageError("encode: features have " + std::to_string(features.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim()));
    }
    std::vector<BinaryCode> codes;
    codes.reserve(features.rows());
    constexpr std::size_t kChunk = 512;
    for (std::size_t begin = 0; begin < features.rows(); begin += kChunk) {
        const std::size_t end = std::min(features.rows(), begin + kChunk);
        const Matrix z = model.forward(row_block(features, begin, end));
        for (std::size_t r = 0; r < z.rows(); ++r) codes.push_back(sign_threshold(z.row(r)));
    }
    return codes;
}

double domain_accuracy(const Discriminator& disc, const HashModel& model, const Matrix& source_x,
                       const Matrix& target_x) {
    const auto ps = disc.forward(model.forward(source_x));
    const auto pt = disc.forward(model.forward(target_x));
    std::size_t correct = 0;
    for (double p : ps) correct += p <= 0.5 ? 1 : 0;
    for (double p : pt) correct += p > 0.5 ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(ps.size() + pt.size());
}

Discriminator fit_domain_probe(const HashModel& frozen, const Matrix& source_x, const Matrix& target_x,
                               const TrainConfig& cfg, std::size_t steps) {
    if (source_x.rows() == 0 || target_x.rows() == 0) throw UsageError("fit_domain_probe: empty domain");
    std::seed_seq seq{cfg.seed, std::uint64_t{0x9b0be}};
    std::mt19937_64 rng(seq);
    Discriminator probe(frozen.bits(), cfg.disc_hidden, rng(), cfg.disc_lr_mult);
    SgdState sgd;
    sgd.momentum = cfg.momentum;
    sgd.weight_decay = cfg.weight_decay;
    // Codes are fixed, so encode once.
    const Matrix zs = frozen.forward(source_x);
    const Matrix zt = frozen.forward(target_x);
    std::uniform_int_distribution<std::size_t> ps(0, zs.rows() - 1);
    std::uniform_int_distribution<std::size_t> pt(0, zt.rows() - 1);
    const std::size_t half = 2 * cfg.batch_size;
    std::vector<int> domain(2 * half, 0);
    std::fill(domain.begin() + static_cast<std::ptrdiff_t>(half), domain.end(), 1);
    for (std::size_t step = 0; step < steps; ++step) {
        std::vector<std::size_t> rs(half), rt(half);
        for (auto& r : rs) r = ps(rng);
        for (auto& r : rt) r = pt(rng);
        const Matrix z = vstack(gather_rows(zs, rs), gather_rows(zt, rt));
        ForwardCache cache;
        const auto p = probe.forward(z, &cache);
        const VectorLoss bce = domain_bce(p, domain);
        const MlpGrads g = probe.backward(cache, bce.grad);
        sgd_step(sgd, probe.net(), g, cfg.lr(static_cast<double>(step) / static_cast<double>(steps)));
    }
    return probe;
}

void write_history_csv(const std::string& path, std::span<const EpochRecord> history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "epoch,J,L,Q,D,disc_accuracy,mu,lr\n";
    out << std::setprecision(17);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.j << ',' << r.l << ',' << r.q << ',' << r.d << ',' << r.disc_accuracy << ','
            << r.mu << ',' << r.lr << '\n';
    }
    if (!out) throw IoError("write failed on " + path);
}

}  // namespace hamball
