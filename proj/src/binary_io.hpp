#pragma once

// Little-endian primitive encoding shared by the file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "dcmh/core.hpp"

namespace dcmh::io {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

inline void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void put_u8(std::ostream& out, std::uint8_t v) { put_bytes(out, &v, 1); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_bytes(out, &v, 4); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_bytes(out, &v, 8); }
inline void put_f64(std::ostream& out, double v) { put_bytes(out, &v, 8); }

/// Reads fixed-width fields and reports the byte offset of any short read.
class Reader {
public:
    Reader(std::istream& in, std::string context, std::int64_t offset = 0)
        : in_(in), context_(std::move(context)), offset_(offset) {}

    std::int64_t offset() const { return offset_; }

    void bytes(void* p, std::size_t n, std::string_view field) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            fail("truncated while reading " + std::string(field));
        offset_ += static_cast<std::int64_t>(n);
    }

    std::uint8_t u8(std::string_view field) {
        std::uint8_t v;
        bytes(&v, 1, field);
        return v;
    }
    std::uint32_t u32(std::string_view field) {
        std::uint32_t v;
        bytes(&v, 4, field);
        return v;
    }
    std::uint64_t u64(std::string_view field) {
        std::uint64_t v;
        bytes(&v, 8, field);
        return v;
    }
    double f64(std::string_view field) {
        double v;
        bytes(&v, 8, field);
        return v;
    }

    void magic(std::string_view expected) {
        std::string got(expected.size(), '\0');
        bytes(got.data(), got.size(), "magic");
        if (got != expected) {
            offset_ -= static_cast<std::int64_t>(expected.size());
            fail("bad magic, expected " + std::string(expected));
        }
    }

    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) fail("unexpected trailing bytes");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(context_ + ": " + msg, 0, offset_);
    }

private:
    std::istream& in_;
    std::string context_;
    std::int64_t offset_;
};

}  // namespace dcmh::io
