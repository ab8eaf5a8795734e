#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hamball/codes.hpp"

namespace hamball {

struct Neighbor {
    std::uint64_t id;
    std::size_t distance;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct QueryStats {
    std::uint64_t probes = 0;
    std::uint64_t hits = 0;  // non-empty buckets
};

struct BinaryCodeHash {
    std::size_t operator()(const BinaryCode& c) const noexcept;
};

/**
 * Exact radius-r retrieval by probing every bucket of the query's Hamming
 * ball. The table maps each distinct code to the ids stored under it; probe
 * cost is ball_size(b, r) lookups regardless of database size.
 *
 * Immutable after construction, so concurrent queries are safe.
 */
class CodeIndex {
public:
    CodeIndex() = default;

    // ids are the input positions.
    static CodeIndex build(std::span<const BinaryCode> codes);
    static CodeIndex build(std::span<const BinaryCode> codes, std::span<const std::uint64_t> ids);

    std::size_t bits() const { return bits_; }
    std::size_t size() const { return size_; }
    std::size_t num_buckets() const { return table_.size(); }
    const std::vector<std::uint64_t>* bucket(const BinaryCode& code) const;

    // Ids within distance r of q, sorted by (distance, id).
    std::vector<Neighbor> query_radius(const BinaryCode& q, std::size_t radius, QueryStats* stats = nullptr) const;

    // Rebuild from an HBC1 code file plus an HID1 id sidecar.
    static CodeIndex load(const std::string& codes_path, const std::string& ids_path);

private:
    std::size_t bits_ = 0;
    std::size_t size_ = 0;
    std::unordered_map<BinaryCode, std::vector<std::uint64_t>, BinaryCodeHash> table_;
};

// Brute-force definition of CodeIndex::query_radius with ids = positions.
std::vector<Neighbor> linear_scan(std::span<const BinaryCode> codes, const BinaryCode& q, std::size_t radius);

// HID1 sidecar: "HID1", u64 count, count little-endian u64 ids.
void save_ids(const std::string& path, std::span<const std::uint64_t> ids);
std::vector<std::uint64_t> load_ids(const std::string& path);

}  // namespace hamball
