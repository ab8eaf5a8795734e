#include "hamball/eval.hpp"

#include <algorithm>

#include "hamball/error.hpp"
#include "hamball/parallel.hpp"

namespace hamball {

RelevanceJudge::RelevanceJudge(std::vector<std::uint32_t> query_labels, std::vector<std::uint32_t> db_labels)
    : query_labels_(std::move(query_labels)), db_labels_(std::move(db_labels)) {
    for (std::uint32_t l : db_labels_) {
        if (l >= class_counts_.size()) class_counts_.resize(static_cast<std::size_t>(l) + 1, 0);
        ++class_counts_[l];
    }
}

bool RelevanceJudge::relevant(std::size_t query, std::uint64_t db_id) const {
    return query_labels_.at(query) == db_labels_.at(static_cast<std::size_t>(db_id));
}

std::size_t RelevanceJudge::total_relevant(std::size_t query) const {
    const std::uint32_t l = query_labels_.at(query);
    return l < class_counts_.size() ? class_counts_[l] : 0;
}

namespace {

void check_queries(std::span<const BinaryCode> queries, const RelevanceJudge& judge) {
    if (queries.empty()) throw UsageError("retrieval metrics: empty query set");
    if (queries.size() != judge.num_queries()) {
        throw UsageError("retrieval metrics: " + std::to_string(queries.size()) + " query codes but " +
                         std::to_string(judge.num_queries()) + " query labels");
    }
}

void check_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge) {
    if (lists.empty()) throw UsageError("retrieval metrics: empty query set");
    if (lists.size() != judge.num_queries()) throw UsageError("retrieval metrics: query count mismatch");
}

std::size_t count_relevant(std::span<const Neighbor> list, std::size_t q, const RelevanceJudge& judge) {
    return static_cast<std::size_t>(
        std::count_if(list.begin(), list.end(), [&](const Neighbor& n) { return judge.relevant(q, n.id); }));
}

// Per-query values computed in parallel, summed in query order.
template <typename F>
double mean_over_queries(std::size_t n, F&& per_query) {
    std::vector<double> values(n);
    parallel_for(n, [&](std::size_t q) { values[q] = per_query(q); });
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(n);
}

}  // namespace

std::vector<std::vector<Neighbor>> retrieve_all(const CodeIndex& index, std::span<const BinaryCode> queries,
                                                std::size_t radius) {
    std::vector<std::vector<Neighbor>> lists(queries.size());
    parallel_for(queries.size(), [&](std::size_t q) { lists[q] = index.query_radius(queries[q], radius); });
    return lists;
}

double average_precision(std::span<const Neighbor> ranked, std::size_t query, const RelevanceJudge& judge) {
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        if (judge.relevant(query, ranked[k].id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double map_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge) {
    check_lists(lists, judge);
    return mean_over_queries(lists.size(), [&](std::size_t q) { return average_precision(lists[q], q, judge); });
}

double precision_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge) {
    check_lists(lists, judge);
    return mean_over_queries(lists.size(), [&](std::size_t q) {
        if (lists[q].empty()) return 0.0;
        return static_cast<double>(count_relevant(lists[q], q, judge)) / static_cast<double>(lists[q].size());
    });
}

double avg_similar_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge) {
    check_lists(lists, judge);
    return mean_over_queries(lists.size(),
                             [&](std::size_t q) { return static_cast<double>(count_relevant(lists[q], q, judge)); });
}

std::vector<PrPoint> pr_curve_from_lists(const std::vector<std::vector<Neighbor>>& lists, const RelevanceJudge& judge) {
    check_lists(lists, judge);
    std::size_t longest = 0;
    std::size_t total_relevant = 0;
    for (std::size_t q = 0; q < lists.size(); ++q) {
        longest = std::max(longest, lists[q].size());
        total_relevant += judge.total_relevant(q);
    }
    if (longest == 0) return {{0.0, 0.0}};

    // hits_at[k] = relevant items among the first k+1 positions, pooled over queries;
    // taken_at[k] = items available among the first k+1 positions.
    std::vector<std::size_t> hits_at(longest, 0);
    std::vector<std::size_t> taken_at(longest, 0);
    for (std::size_t q = 0; q < lists.size(); ++q) {
        std::size_t hits = 0;
        for (std::size_t k = 0; k < longest; ++k) {
            if (k < lists[q].size()) {
                if (judge.relevant(q, lists[q][k].id)) ++hits;
                taken_at[k] += k + 1;
            } else {
                taken_at[k] += lists[q].size();
            }
            hits_at[k] += hits;
        }
    }
    std::vector<PrPoint> curve;
    curve.reserve(longest);
    for (std::size_t k = 0; k < longest; ++k) {
        const double precision = static_cast<double>(hits_at[k]) / static_cast<double>(taken_at[k]);
        const double recall =
            total_relevant == 0 ? 0.0 : static_cast<double>(hits_at[k]) / static_cast<double>(total_relevant);
        curve.push_back({recall, precision});
    }
    return curve;
}

double map_at_radius(const CodeIndex& index, std::span<const BinaryCode> queries, const RelevanceJudge& judge,
                     std::size_t radius) {
    check_queries(queries, judge);
    return map_from_lists(retrieve_all(index, queries, radius), judge);
}

double precision_at_radius(const CodeIndex& index, std::span<const BinaryCode> queries, const RelevanceJudge& judge,
                           std::size_t radius) {
    check_queries(queries, judge);
    return precision_from_lists(retrieve_all(index, queries, radius), judge);
}

double avg_similar_within_radius(const CodeIndex& index, std::span<const BinaryCode> queries,
                                 const RelevanceJudge& judge, std::size_t radius) {
    check_queries(queries, judge);
    return avg_similar_from_lists(retrieve_all(index, queries, radius), judge);
}

std::vector<PrPoint> pr_curve_at_radius(const CodeIndex& index, std::span<const BinaryCode> queries,
                                        const RelevanceJudge& judge, std::size_t radius) {
    check_queries(queries, judge);
    return pr_curve_from_lists(retrieve_all(index, queries, radius), judge);
}

RetrievalMetrics evaluate_retrieval(const CodeIndex& index, std::span<const BinaryCode> queries,
                                    const RelevanceJudge& judge, std::size_t radius) {
    check_queries(queries, judge);
    const auto lists = retrieve_all(index, queries, radius);
    RetrievalMetrics m;
    m.radius = radius;
    m.num_queries = queries.size();
    std::size_t retrieved = 0;
    for (const auto& l : lists) {
        if (l.empty()) ++m.empty_queries;
        retrieved += l.size();
    }
    m.avg_retrieved = static_cast<double>(retrieved) / static_cast<double>(lists.size());
    m.map = map_from_lists(lists, judge);
    m.precision = precision_from_lists(lists, judge);
    m.avg_similar = avg_similar_from_lists(lists, judge);
    m.pr_curve = pr_curve_from_lists(lists, judge);
    return m;
}

}  // namespace hamball
