#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hamball/data.hpp"
#include "hamball/eval.hpp"
#include "hamball/trainer.hpp"

namespace hamball {

/**
 * Everything needed to reproduce a run: the synthetic task, the training
 * setup and the evaluation options. Serialized into every output directory.
 */
struct ExperimentConfig {
    ShiftSpec shift;
    std::size_t n_source = 2000;
    std::size_t n_target = 2000;   // unlabeled training rows, also the retrieval database
    std::size_t n_query = 500;     // held-out target queries
    std::uint64_t data_seed = 7;
    TrainConfig train;
    std::vector<std::size_t> bits_list{16, 32};
    std::size_t radius = 2;

    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::string& path);
void save_experiment(const ExperimentConfig& cfg, const std::string& path);

struct TransferData {
    FeatureDataset source;    // labeled
    FeatureDataset database;  // target domain; labels used only for evaluation
    FeatureDataset queries;   // held-out target domain
    FeatureDataset heldout_source;  // source rows never seen in training, same count as queries
};

TransferData make_transfer_data(const ExperimentConfig& cfg);

struct VariantOutcome {
    Variant variant = Variant::kTah;
    std::size_t bits = 0;
    TrainResult trained;
    RetrievalMetrics metrics;
};

// Train one variant at cfg.train.bits and evaluate target->target retrieval.
VariantOutcome run_variant(const ExperimentConfig& cfg, const TransferData& data, Variant variant);

RetrievalMetrics evaluate_model(const HashModel& model, const FeatureDataset& queries, const FeatureDataset& database,
                                std::size_t radius);

nlohmann::json metrics_to_json(const RetrievalMetrics& m);
void write_pr_csv(const std::string& path, const std::vector<PrPoint>& curve);

/**
 * Domain separability of held-out codes: the adversarially trained
 * discriminator of an adversarial run versus a fresh probe fitted to the
 * frozen codes of a source-only run.
 */
struct AlignmentReport {
    double adversarial_accuracy = 0.0;
    double probe_accuracy = 0.0;
    std::size_t probe_steps = 0;
};

AlignmentReport measure_alignment(const ExperimentConfig& cfg, const TransferData& data, const VariantOutcome& adversarial,
                                  const VariantOutcome& source_only);

struct AblationTable {
    std::vector<std::size_t> bits;
    std::vector<VariantOutcome> outcomes;  // bits-major, variants in order TAH-t, TAH-A, TAH
    std::vector<AlignmentReport> alignment;  // one per entry of bits

    const VariantOutcome& at(Variant v, std::size_t b) const;
};

AblationTable run_ablation(const ExperimentConfig& cfg);

// Method rows x bit columns of MAP within the radius; plus a long-form CSV of all metrics.
void write_ablation_csv(const std::string& path, const AblationTable& table);
void write_ablation_long_csv(const std::string& path, const AblationTable& table);

/**
 * run_ablation plus every artifact of the run under `dir`: config.json,
 * ablation.csv, ablation_long.csv, alignment.json, and per run
 * pr_<variant>_<bits>.csv and history_<variant>_<bits>.csv.
 */
AblationTable ablate_to_dir(const ExperimentConfig& cfg, const std::string& dir);

}  // namespace hamball
