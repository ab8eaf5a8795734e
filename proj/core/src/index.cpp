#include "hamball/index.hpp"

#include <algorithm>
#include <numeric>

#include "hamball/binary_io.hpp"
#include "hamball/error.hpp"

namespace hamball {

std::size_t BinaryCodeHash::operator()(const BinaryCode& c) const noexcept {
    // splitmix64 finalizer folded over the words
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ c.bits();
    for (std::uint64_t w : c.words()) {
        std::uint64_t x = w + 0x9e3779b97f4a7c15ULL + h;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        h = x ^ (x >> 31);
    }
    return static_cast<std::size_t>(h);
}

CodeIndex CodeIndex::build(std::span<const BinaryCode> codes) {
    std::vector<std::uint64_t> ids(codes.size());
    std::iota(ids.begin(), ids.end(), std::uint64_t{0});
    return build(codes, ids);
}

CodeIndex CodeIndex::build(std::span<const BinaryCode> codes, std::span<const std::uint64_t> ids) {
    if (codes.size() != ids.size()) {
        throw UsageError("CodeIndex::build: " + std::to_string(codes.size()) + " codes but " +
                         std::to_string(ids.size()) + " ids");
    }
    CodeIndex ix;
    if (codes.empty()) return ix;
    ix.bits_ = codes.front().bits();
    ix.table_.reserve(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i].bits() != ix.bits_) {
            throw UsageError("CodeIndex::build: code " + std::to_string(i) + " has " + std::to_string(codes[i].bits()) +
                             " bits, expected " + std::to_string(ix.bits_));
        }
        ix.table_[codes[i]].push_back(ids[i]);
    }
    ix.size_ = codes.size();
    return ix;
}

const std::vector<std::uint64_t>* CodeIndex::bucket(const BinaryCode& code) const {
    auto it = table_.find(code);
    return it == table_.end() ? nullptr : &it->second;
}

std::vector<Neighbor> CodeIndex::query_radius(const BinaryCode& q, std::size_t radius, QueryStats* stats) const {
    std::vector<Neighbor> out;
    if (size_ == 0) {
        if (radius > q.bits()) throw UsageError("query_radius: radius exceeds code length");
        if (stats) stats->probes += ball_size(q.bits(), radius);
        return out;
    }
    if (q.bits() != bits_) {
        throw UsageError("query_radius: query has " + std::to_string(q.bits()) + " bits, index has " +
                         std::to_string(bits_));
    }
    std::size_t level_start = 0;
    std::size_t level = 0;
    for_each_in_ball(q, radius, [&](const BinaryCode& probe, std::size_t flips) {
        if (flips != level) {
            std::sort(out.begin() + static_cast<std::ptrdiff_t>(level_start), out.end(),
                      [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
            level_start = out.size();
            level = flips;
        }
        if (stats) ++stats->probes;
        auto it = table_.find(probe);
        if (it == table_.end()) return;
        if (stats) ++stats->hits;
        for (std::uint64_t id : it->second) out.push_back({id, flips});
    });
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(level_start), out.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    return out;
}

CodeIndex CodeIndex::load(const std::string& codes_path, const std::string& ids_path) {
    const auto codes = load_codes(codes_path);
    const auto ids = load_ids(ids_path);
    if (codes.size() != ids.size()) {
        throw IoError("index files disagree: " + std::to_string(codes.size()) + " codes vs " +
                      std::to_string(ids.size()) + " ids");
    }
    return build(codes, ids);
}

std::vector<Neighbor> linear_scan(std::span<const BinaryCode> codes, const BinaryCode& q, std::size_t radius) {
    if (radius > q.bits()) throw UsageError("linear_scan: radius exceeds code length");
    std::vector<Neighbor> out;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::size_t d = hamming_distance(codes[i], q);
        if (d <= radius) out.push_back({i, d});
    }
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    return out;
}

void save_ids(const std::string& path, std::span<const std::uint64_t> ids) {
    io::Writer w(path);
    w.magic("HID1");
    w.put<std::uint64_t>(ids.size());
    w.raw(ids.data(), ids.size_bytes());
    w.close();
}

std::vector<std::uint64_t> load_ids(const std::string& path) {
    io::Reader r(path);
    r.expect_magic("HID1");
    const auto n = r.get<std::uint64_t>("count");
    std::vector<std::uint64_t> ids;
    for (std::uint64_t i = 0; i < n; ++i) ids.push_back(r.get<std::uint64_t>("id"));
    r.expect_end();
    return ids;
}

}  // namespace hamball
