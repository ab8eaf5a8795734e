#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>

#include "hamball/error.hpp"

namespace hamball::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts need byte swapping");

// Sequential little-endian writer over a file.
class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
    }

    void magic(std::string_view m) { raw(m.data(), m.size()); }

    template <typename T>
    void put(T value) {
        raw(&value, sizeof(T));
    }

    void raw(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed on " + path_);
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("close failed on " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

// Sequential reader reporting the byte offset and field name on failure.
class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open " + path + " for reading");
    }

    void expect_magic(std::string_view m, std::string_view field = "magic") {
        std::string got(m.size(), '\0');
        raw(got.data(), got.size(), field);
        if (got != m) {
            fail(field, "expected \"" + std::string(m) + "\"", offset_ - m.size());
        }
    }

    template <typename T>
    T get(std::string_view field) {
        T value{};
        raw(&value, sizeof(T), field);
        return value;
    }

    void raw(void* data, std::size_t n, std::string_view field) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            fail(field, "truncated file", offset_ + static_cast<std::size_t>(in_.gcount()));
        }
        offset_ += n;
    }

    std::size_t offset() const { return offset_; }

    // Throws unless the file has been consumed exactly.
    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) fail("trailer", "unexpected trailing bytes", offset_);
    }

    [[noreturn]] void fail(std::string_view field, const std::string& what, std::size_t at) const {
        throw IoError(path_ + ": " + what + " in field '" + std::string(field) + "' at byte offset " +
                      std::to_string(at));
    }

private:
    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

}  // namespace hamball::io
