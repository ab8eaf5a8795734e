#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hamball/codes.hpp"
#include "hamball/data.hpp"
#include "hamball/error.hpp"
#include "hamball/loss.hpp"
#include "hamball/net.hpp"

namespace hamball {

enum class Variant { kTah, kTahT, kTahA };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

// mu(p) = mu_max * (2 / (1 + e^{-gamma p}) - 1), rescaled so mu(1) = mu_max exactly.
struct MuSchedule {
    double mu_max = 1.0;
    double gamma = 10.0;

    double operator()(double progress) const;
};

// lr(p) = lr0 / (1 + gamma p)^power
struct LrSchedule {
    double base = 0.003;
    double gamma = 10.0;
    double power = 0.75;

    double operator()(double progress) const;
};

struct TrainConfig {
    std::size_t bits = 16;
    std::vector<std::size_t> hidden{256};
    std::vector<std::size_t> disc_hidden{64, 64};
    std::size_t epochs = 30;
    std::size_t batch_size = 64;       // pairs per step
    std::size_t steps_per_epoch = 0;   // 0: ceil(n_source / batch_size)
    double similar_fraction = 0.25;    // similar:dissimilar = 1:3
    LrSchedule lr;
    double alpha = 0.0;                // 0: 16 / bits
    double ip_alpha = 0.5;             // TAH-t sharpness
    double lambda = 0.1;
    MuSchedule mu;
    double hash_lr_mult = 10.0;
    double disc_lr_mult = 10.0;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    bool squared_norm = true;
    std::uint64_t seed = 7;
    Variant variant = Variant::kTah;

    double effective_alpha() const;
    double effective_ip_alpha() const;
    LossConfig loss_config() const;
    void validate() const;
};

// Row indices into the source set plus labels for one mini-batch of pairs.
struct PairIndices {
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    std::vector<int> s;

    std::size_t size() const { return s.size(); }
};

/**
 * Draw `count` pairs. Each pair is targeted as similar with probability
 * `similar_fraction`; the partner is redrawn until its label agrees with the
 * target. Labels must contain at least two classes.
 */
PairIndices sample_pairs(std::span<const std::uint32_t> labels, std::size_t count, double similar_fraction,
                         std::mt19937_64& rng);

// Relaxed codes for the sampled pairs.
PairBatch sample_pair_batch(const FeatureDataset& source, const HashModel& model, std::size_t count,
                            double similar_fraction, std::mt19937_64& rng);

// One row of the training history.
struct EpochRecord {
    std::size_t epoch = 0;
    double j = 0.0;
    double l = 0.0;
    double q = 0.0;
    double d = 0.0;
    double disc_accuracy = 0.0;
    double mu = 0.0;
    double lr = 0.0;
};

struct StepInputs {
    Matrix source_x;   // 2P rows: left items then right items
    std::vector<int> s;
    Matrix target_x;   // unlabeled target rows; empty for TAH-A
};

/**
 * Losses and gradients of one step at fixed parameters.
 * hash_pair holds dJ/dtheta_f, hash_adv the reversed adversarial branch
 * (-mu dD/dtheta_f); their sum is what the hash network descends.
 */
struct StepResult {
    double j = 0.0;
    double l = 0.0;
    double q = 0.0;
    double d = 0.0;
    double disc_accuracy = 0.0;
    bool adversarial = false;
    MlpGrads hash_pair;
    MlpGrads hash_adv;
    MlpGrads disc;
};

StepResult compute_step(const HashModel& model, const Discriminator& disc, const StepInputs& in,
                        const TrainConfig& cfg, double mu);

// Thrown when a loss turns non-finite; `dump` describes the offending batch.
class TrainingAborted : public NumericalError {
public:
    TrainingAborted(const std::string& what, std::string dump) : NumericalError(what), dump_(std::move(dump)) {}
    const std::string& dump() const { return dump_; }

private:
    std::string dump_;
};

/**
 * Saddle-point optimization of J - mu D: the discriminator descends D while
 * the hash network descends J and, through gradient reversal, ascends mu D.
 * Single-threaded and deterministic for a given config and data.
 */
class Trainer {
public:
    Trainer(TrainConfig cfg, const FeatureDataset& source, const UnlabeledFeatures& target);

    void run_epoch();
    void run(std::size_t epochs);

    const HashModel& model() const { return model_; }
    const Discriminator& discriminator() const { return disc_; }
    const std::vector<EpochRecord>& history() const { return history_; }
    std::size_t steps_per_epoch() const { return steps_per_epoch_; }
    std::size_t total_steps() const { return steps_per_epoch_ * cfg_.epochs; }
    std::size_t step() const { return step_; }

private:
    TrainConfig cfg_;
    const FeatureDataset& source_;
    const UnlabeledFeatures& target_;
    HashModel model_;
    Discriminator disc_;
    SgdState hash_sgd_;
    SgdState disc_sgd_;
    std::mt19937_64 rng_;
    std::size_t steps_per_epoch_ = 0;
    std::size_t step_ = 0;
    std::vector<EpochRecord> history_;
};

struct TrainResult {
    HashModel model;
    Discriminator disc;
    std::vector<EpochRecord> history;
};

TrainResult train(const TrainConfig& cfg, const FeatureDataset& source, const UnlabeledFeatures& target);

// sign_threshold of the hash network output, row by row.
std::vector<BinaryCode> encode(const HashModel& model, const Matrix& features);

// Fraction of rows classified correctly (p > 0.5 means target).
double domain_accuracy(const Discriminator& disc, const HashModel& model, const Matrix& source_x,
                       const Matrix& target_x);

/**
 * Fresh discriminator trained on relaxed codes of a frozen hash network;
 * measures how separable the two domains remain in code space.
 */
Discriminator fit_domain_probe(const HashModel& frozen, const Matrix& source_x, const Matrix& target_x,
                               const TrainConfig& cfg, std::size_t steps);

void write_history_csv(const std::string& path, std::span<const EpochRecord> history);

}  // namespace hamball
