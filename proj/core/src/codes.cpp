#include "hamball/codes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hamball/binary_io.hpp"
#include "hamball/error.hpp"

namespace hamball {

namespace {

void check_bits(std::size_t bits) {
    if (bits == 0 || bits > kMaxCodeBits) {
        throw UsageError("code length must be in [1, " + std::to_string(kMaxCodeBits) + "], got " +
                         std::to_string(bits));
    }
}

std::uint64_t tail_mask(std::size_t bits) {
    const std::size_t rem = bits % 64;
    return rem == 0 ? ~0ULL : ((1ULL << rem) - 1);
}

}  // namespace

BinaryCode::BinaryCode(std::size_t bits) : bits_(bits), words_(words_for_bits(bits), 0) { check_bits(bits); }

BinaryCode::BinaryCode(std::size_t bits, std::vector<std::uint64_t> words) : bits_(bits), words_(std::move(words)) {
    check_bits(bits);
    if (words_.size() != words_for_bits(bits)) {
        throw UsageError("BinaryCode: " + std::to_string(bits) + " bits need " +
                         std::to_string(words_for_bits(bits)) + " words, got " + std::to_string(words_.size()));
    }
    if (words_.back() & ~tail_mask(bits)) throw UsageError("BinaryCode: bits set beyond code length");
}

BinaryCode BinaryCode::from_signs(std::span<const int> signs) {
    BinaryCode c(signs.size());
    for (std::size_t k = 0; k < signs.size(); ++k) {
        if (signs[k] != 1 && signs[k] != -1) throw UsageError("BinaryCode::from_signs: values must be +1 or -1");
        if (signs[k] == 1) c.set_bit(k, true);
    }
    return c;
}

void BinaryCode::set_bit(std::size_t k, bool value) {
    const std::uint64_t m = 1ULL << (k % 64);
    if (value) {
        words_[k / 64] |= m;
    } else {
        words_[k / 64] &= ~m;
    }
}

std::vector<int> BinaryCode::unpack() const {
    std::vector<int> out(bits_);
    for (std::size_t k = 0; k < bits_; ++k) out[k] = sign(k);
    return out;
}

BinaryCode BinaryCode::complement() const {
    BinaryCode c = *this;
    for (auto& w : c.words_) w = ~w;
    c.words_.back() &= tail_mask(bits_);
    return c;
}

std::string BinaryCode::to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(words_.size() * 16);
    for (auto it = words_.rbegin(); it != words_.rend(); ++it) {
        for (int shift = 60; shift >= 0; shift -= 4) out.push_back(kDigits[(*it >> shift) & 0xF]);
    }
    return out;
}

BinaryCode BinaryCode::from_hex(std::size_t bits, const std::string& hex) {
    check_bits(bits);
    std::string digits = hex;
    if (digits.starts_with("0x") || digits.starts_with("0X")) digits = digits.substr(2);
    const std::size_t nwords = words_for_bits(bits);
    if (digits.empty() || digits.size() > nwords * 16) throw UsageError("from_hex: bad length for " + std::to_string(bits) + "-bit code");
    std::vector<std::uint64_t> words(nwords, 0);
    std::size_t nibble = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it, ++nibble) {
        const char ch = *it;
        std::uint64_t v;
        if (ch >= '0' && ch <= '9') {
            v = static_cast<std::uint64_t>(ch - '0');
        } else if (ch >= 'a' && ch <= 'f') {
            v = static_cast<std::uint64_t>(ch - 'a' + 10);
        } else if (ch >= 'A' && ch <= 'F') {
            v = static_cast<std::uint64_t>(ch - 'A' + 10);
        } else {
            throw UsageError(std::string("from_hex: invalid digit '") + ch + "'");
        }
        words[nibble / 16] |= v << (4 * (nibble % 16));
    }
    return BinaryCode(bits, std::move(words));
}

RelaxedCode::RelaxedCode(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!(std::abs(v) <= 1.0 + kTolerance)) {
            throw UsageError("RelaxedCode: component " + std::to_string(v) + " outside [-1, 1]");
        }
    }
}

std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b) {
    if (a.bits() != b.bits()) {
        throw UsageError("hamming_distance: length mismatch " + std::to_string(a.bits()) + " vs " +
                         std::to_string(b.bits()));
    }
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t d = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
    return d;
}

BinaryCode sign_threshold(std::span<const double> z) {
    BinaryCode c(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (z[k] > 0.0) c.set_bit(k, true);
    }
    return c;
}

BinaryCode sign_threshold(const RelaxedCode& z) { return sign_threshold(z.values()); }

std::uint64_t ball_size(std::size_t bits, std::size_t radius) {
    if (radius > bits) {
        throw UsageError("ball_size: radius " + std::to_string(radius) + " exceeds code length " + std::to_string(bits));
    }
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t total = 1;
    std::uint64_t binom = 1;  // C(bits, k)
    for (std::size_t k = 1; k <= radius; ++k) {
        // C(b,k) = C(b,k-1) * (b-k+1) / k, exact when divided via gcd-free ordering below.
        const std::uint64_t num = bits - k + 1;
        const std::uint64_t g = std::gcd(binom, static_cast<std::uint64_t>(k));
        const std::uint64_t reduced = binom / g;
        const std::uint64_t kk = k / g;  // kk divides num * reduced; it is coprime to reduced
        const std::uint64_t num_red = num / kk;
        if (num % kk != 0) throw std::logic_error("ball_size: inexact binomial step");
        if (reduced != 0 && num_red > kMax / reduced) throw std::overflow_error("ball_size: overflow");
        binom = reduced * num_red;
        if (binom > kMax - total) throw std::overflow_error("ball_size: overflow");
        total += binom;
    }
    return total;
}

std::vector<BinaryCode> enumerate_ball(const BinaryCode& center, std::size_t radius) {
    std::vector<BinaryCode> out;
    out.reserve(static_cast<std::size_t>(ball_size(center.bits(), radius)));
    for_each_in_ball(center, radius, [&](const BinaryCode& c, std::size_t) { out.push_back(c); });
    return out;
}

}  // namespace hamball

namespace hamball {

void save_codes(const std::string& path, std::size_t bits, std::span<const BinaryCode> codes) {
    check_bits(bits);
    for (const auto& c : codes) {
        if (c.bits() != bits) throw UsageError("save_codes: mixed code lengths");
    }
    io::Writer w(path);
    w.magic("HBC1");
    w.put<std::uint32_t>(static_cast<std::uint32_t>(bits));
    w.put<std::uint64_t>(codes.size());
    for (const auto& c : codes) {
        for (std::uint64_t word : c.words()) w.put(word);
    }
    w.close();
}

std::vector<BinaryCode> load_codes(const std::string& path, std::size_t* bits_out) {
    io::Reader r(path);
    r.expect_magic("HBC1");
    const std::size_t header_at = r.offset();
    const auto bits = r.get<std::uint32_t>("bits");
    if (bits == 0 || bits > kMaxCodeBits) r.fail("bits", "invalid code length " + std::to_string(bits), header_at);
    const auto count = r.get<std::uint64_t>("count");
    const std::size_t nwords = words_for_bits(bits);
    std::vector<BinaryCode> codes;
    codes.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        std::vector<std::uint64_t> words(nwords);
        r.raw(words.data(), nwords * sizeof(std::uint64_t), "code");
        if (words.back() & ~tail_mask(bits)) r.fail("code", "padding bits set in code " + std::to_string(i), at);
        codes.emplace_back(bits, std::move(words));
    }
    r.expect_end();
    if (bits_out) *bits_out = bits;
    return codes;
}

}  // namespace hamball
