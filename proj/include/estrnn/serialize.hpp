#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace estrnn::io {

// Little-endian primitives for the binary containers. Byte-wise packing keeps
// the format independent of host endianness.

inline void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    write_u32(out, static_cast<std::uint32_t>(v & 0xffffffffULL));
    write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t read_u64(std::istream& in) {
    const std::uint64_t lo = read_u32(in);
    const std::uint64_t hi = read_u32(in);
    return lo | (hi << 32);
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

inline void write_f32_array(std::ostream& out, const double* data, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(data[i])));
    }
}

inline void read_f32_array(std::istream& in, double* data, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        data[i] = static_cast<double>(std::bit_cast<float>(read_u32(in)));
    }
}

inline void write_f64_array(std::ostream& out, const double* data, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        write_u64(out, std::bit_cast<std::uint64_t>(data[i]));
    }
}

inline void read_f64_array(std::istream& in, double* data, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        data[i] = std::bit_cast<double>(read_u64(in));
    }
}

}  // namespace estrnn::io
