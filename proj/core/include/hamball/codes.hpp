#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hamball {

inline constexpr std::size_t kMaxCodeBits = 4096;

/**
 * BinaryCode: a b-bit hash code with values in {-1,+1}^b.
 *
 * Stored packed into 64-bit words. A set bit encodes +1, a clear bit -1.
 * Bits beyond b in the last word are always zero, so word-wise comparison
 * and XOR-popcount are exact.
 */
class BinaryCode {
public:
    BinaryCode() = default;
    // All bits clear, i.e. the all-(-1) code.
    explicit BinaryCode(std::size_t bits);
    BinaryCode(std::size_t bits, std::vector<std::uint64_t> words);

    static BinaryCode from_signs(std::span<const int> signs);

    std::size_t bits() const { return bits_; }
    std::size_t num_words() const { return words_.size(); }
    std::span<const std::uint64_t> words() const { return words_; }

    bool bit(std::size_t k) const { return (words_[k / 64] >> (k % 64)) & 1ULL; }
    // +1 or -1.
    int sign(std::size_t k) const { return bit(k) ? 1 : -1; }
    void set_bit(std::size_t k, bool value);
    void flip(std::size_t k) { words_[k / 64] ^= (1ULL << (k % 64)); }

    std::vector<int> unpack() const;
    BinaryCode complement() const;

    // Lowercase hex of the words, most significant word first.
    std::string to_hex() const;
    static BinaryCode from_hex(std::size_t bits, const std::string& hex);

    friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

inline std::size_t words_for_bits(std::size_t bits) { return (bits + 63) / 64; }

/**
 * RelaxedCode: real activations in [-1,1]^b produced by the tanh hash layer.
 * Construction rejects components outside [-1-1e-9, 1+1e-9].
 */
class RelaxedCode {
public:
    static constexpr double kTolerance = 1e-9;

    explicit RelaxedCode(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }

private:
    std::vector<double> values_;
};

std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b);

// Component k is +1 iff z_k > 0; zero maps to -1.
BinaryCode sign_threshold(std::span<const double> z);
BinaryCode sign_threshold(const RelaxedCode& z);

// Number of codes within Hamming distance r of a b-bit code: sum_{k<=r} C(b,k).
// Throws UsageError when r > b and std::overflow_error when the sum exceeds 64 bits.
std::uint64_t ball_size(std::size_t bits, std::size_t radius);

/**
 * Visit every code within distance `radius` of `center`, ordered by number of
 * flipped bits and then lexicographically by flip positions. The visitor
 * receives the code and its flip count; a visitor returning void visits all.
 */
template <typename Visitor>
void for_each_in_ball(const BinaryCode& center, std::size_t radius, Visitor&& visit);

std::vector<BinaryCode> enumerate_ball(const BinaryCode& center, std::size_t radius);

// HBC1 code file: "HBC1", u32 bits, u64 count, then count codes of
// ceil(bits/64) little-endian u64 words each (low bit = bit 0).
void save_codes(const std::string& path, std::size_t bits, std::span<const BinaryCode> codes);
std::vector<BinaryCode> load_codes(const std::string& path, std::size_t* bits_out = nullptr);

}  // namespace hamball

#include "hamball/detail/ball_impl.hpp"
