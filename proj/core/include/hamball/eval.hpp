#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hamball/codes.hpp"
#include "hamball/index.hpp"

namespace hamball {

// Ground truth: a query and a database item are relevant iff their class labels match.
class RelevanceJudge {
public:
    RelevanceJudge(std::vector<std::uint32_t> query_labels, std::vector<std::uint32_t> db_labels);

    bool relevant(std::size_t query, std::uint64_t db_id) const;
    // Relevant items for `query` in the whole database.
    std::size_t total_relevant(std::size_t query) const;
    std::size_t num_queries() const { return query_labels_.size(); }
    std::size_t db_size() const { return db_labels_.size(); }

private:
    std::vector<std::uint32_t> query_labels_;
    std::vector<std::uint32_t> db_labels_;
    std::vector<std::size_t> class_counts_;
};

struct PrPoint {
    double recall;
    double precision;

    friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

// Radius-r result list per query, in (distance, id) order.
std::vector<std::vector<Neighbor>> retrieve_all(const CodeIndex& index, std::span<const BinaryCode> queries,
                                                std::size_t radius);

/**
 * Average precision of one ranked list. The denominator is the number of
 * relevant items in the list, and a list with no relevant item scores 0.
 */
double average_precision(std::span<const Neighbor> ranked, std::size_t query, const RelevanceJudge& judge);

double map_at_radius(const CodeIndex& index, std::span<const BinaryCode> queries, const RelevanceJudge& judge,
                     std::size_t radius = 2);
// Mean of relevant/retrieved per query; empty retrievals count as 0.
double precision_at_radius(const CodeIndex& index, std::span<const BinaryCode> queries, const RelevanceJudge& judge,
                           std::size_t radius = 2);
// Mean number of relevant items within the radius.
double avg_similar_within_radius(const CodeIndex& index, std::span<const BinaryCode> queries,
                                 const RelevanceJudge& judge, std::size_t radius = 2);

/**
 * Pooled precision-recall over rank cutoffs k = 1..K, K the longest list.
 * At cutoff k each query contributes its top min(k, |list|) items:
 *   precision = sum relevant taken / sum taken
 *   recall    = sum relevant taken / sum relevant in database
 * Returns the single point (0, 0) when every list is empty.
 */
std::vector<PrPoint> pr_curve_at_radius(const CodeIndex& index, std::span<const BinaryCode> queries,
                                        const RelevanceJudge& judge, std::size_t radius = 2);

// The same metrics computed from precomputed result lists.
double map_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge);
double precision_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge);
double avg_similar_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge);
std::vector<PrPoint> pr_curve_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge);

struct RetrievalMetrics {
    std::size_t radius = 2;
    std::size_t num_queries = 0;
    std::size_t empty_queries = 0;
    double map = 0.0;
    double precision = 0.0;
    double avg_similar = 0.0;
    double avg_retrieved = 0.0;
    std::vector<PrPoint> pr_curve;
};

RetrievalMetrics evaluate_retrieval(const CodeIndex& index, std::span<const BinaryCode> queries,
                                    const RelevanceJudge& judge, std::size_t radius = 2);

}  // namespace hamball
