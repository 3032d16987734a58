#pragma once

// Little-endian scalar (de)serialization shared by the AQT0 and AQPK file
// formats. Explicit byte shuffling, not memcpy of host words, so files are
// bit-exact on any platform.

#include "aqc/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace aqc::wire {

inline void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) {
        throw IoError("write failed at byte position " + std::to_string(out.tellp()));
    }
}

inline void put_u8(std::ostream& out, std::uint8_t v) {
    put_bytes(out, &v, 1);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    put_bytes(out, b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    }
    put_bytes(out, b, 8);
}

inline void put_f32(std::ostream& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void read_exact(std::istream& in, void* p, std::size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw ParseError(ParseError::Kind::Truncated,
                         std::string("truncated input while reading ") + what);
    }
}

inline std::uint8_t get_u8(std::istream& in, const char* what) {
    std::uint8_t v = 0;
    read_exact(in, &v, 1, what);
    return v;
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    read_exact(in, b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& in, const char* what) {
    unsigned char b[8];
    read_exact(in, b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

inline float get_f32(std::istream& in, const char* what) {
    return std::bit_cast<float>(get_u32(in, what));
}

inline void expect_eof(std::istream& in, const char* what) {
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ParseError(ParseError::Kind::TrailingData,
                         std::string("trailing bytes after ") + what);
    }
}

}  // namespace aqc::wire
