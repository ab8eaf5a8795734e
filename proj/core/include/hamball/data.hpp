#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamball/matrix.hpp"

namespace hamball {

enum class Domain : std::uint8_t { kSource = 0, kTarget = 1 };

// Feature rows without labels; the only form in which target data reaches training.
struct UnlabeledFeatures {
    Matrix features;
};

struct FeatureDataset {
    Matrix features;  // n x d
    std::optional<std::vector<std::uint32_t>> labels;
    Domain domain = Domain::kSource;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
    bool has_labels() const { return labels.has_value(); }

    void validate() const;
    UnlabeledFeatures without_labels() const { return {features}; }
    // Rows [begin, end) as a new dataset.
    FeatureDataset slice(std::size_t begin, std::size_t end) const;
};

/**
 * Gaussian class clusters for a source domain and an affinely shifted copy
 * for the target domain. The target map is x -> scale * R x + t where R
 * rotates by `rotation_deg` in `rotation_planes` random 2-planes and t is a
 * random direction with norm translation * spread * sqrt(dim).
 */
struct ShiftSpec {
    std::size_t classes = 10;
    std::size_t dim = 64;
    double center_scale = 0.8;  // per-coordinate std of class centers
    double spread = 1.0;        // per-coordinate std within a class
    double rotation_deg = 30.0;
    std::size_t rotation_planes = 1;
    double translation = 1.5;
    double scale = 1.0;

    void validate() const;
};

struct DomainPair {
    FeatureDataset source;
    FeatureDataset target;
};

DomainPair generate(const ShiftSpec& spec, std::size_t n_source, std::size_t n_target, std::uint64_t seed);

// HFV1: "HFV1", u32 d, u64 n, u8 has_labels, n*d row-major f32, then n u32 labels if present.
void save_features(const FeatureDataset& ds, const std::string& path);
FeatureDataset load_features(const std::string& path, Domain domain = Domain::kSource);

// CSV with a header row; a column named `label_column` (if present) holds integer class ids.
FeatureDataset load_features_csv(const std::string& path, Domain domain = Domain::kSource,
                                 const std::string& label_column = "label");

}  // namespace hamball
