#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "finadapt/error.hpp"

// Little-endian primitives for the binary file formats (records, checkpoints,
// attention dumps). Explicit byte assembly keeps the formats identical across
// platforms regardless of host endianness.

namespace finadapt::binio {

inline void put_u8(std::ostream& os, uint8_t v) {
    os.put(static_cast<char>(v));
}

inline void put_u16(std::ostream& os, uint16_t v) {
    put_u8(os, static_cast<uint8_t>(v & 0xff));
    put_u8(os, static_cast<uint8_t>(v >> 8));
}

inline void put_u32(std::ostream& os, uint32_t v) {
    put_u16(os, static_cast<uint16_t>(v & 0xffff));
    put_u16(os, static_cast<uint16_t>(v >> 16));
}

inline void put_u64(std::ostream& os, uint64_t v) {
    put_u32(os, static_cast<uint32_t>(v & 0xffffffffu));
    put_u32(os, static_cast<uint32_t>(v >> 32));
}

inline void put_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

inline void put_bytes(std::ostream& os, const void* data, size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

// Readers throw FileFormatError{truncated} on premature EOF; `what` names the
// file section being read.

inline void get_bytes(std::istream& is, void* out, size_t n, const std::string& what) {
    is.read(static_cast<char*>(out), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n) {
        throw FileFormatError(FileFault::truncated, "truncated " + what);
    }
}

inline uint8_t get_u8(std::istream& is, const std::string& what) {
    uint8_t v;
    get_bytes(is, &v, 1, what);
    return v;
}

inline uint16_t get_u16(std::istream& is, const std::string& what) {
    uint8_t b[2];
    get_bytes(is, b, 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline uint32_t get_u32(std::istream& is, const std::string& what) {
    uint8_t b[4];
    get_bytes(is, b, 4, what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t get_u64(std::istream& is, const std::string& what) {
    uint64_t lo = get_u32(is, what);
    uint64_t hi = get_u32(is, what);
    return lo | (hi << 32);
}

inline float get_f32(std::istream& is, const std::string& what) {
    uint32_t bits = get_u32(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<uint32_t>(s.size()));
    put_bytes(os, s.data(), s.size());
}

inline std::string get_string(std::istream& is, const std::string& what) {
    uint32_t n = get_u32(is, what);
    std::string s(n, '\0');
    if (n > 0) get_bytes(is, s.data(), n, what);
    return s;
}

// Bit packing, LSB-first: bit i of byte i/8.
inline std::vector<uint8_t> pack_bits(const std::vector<uint8_t>& bits) {
    std::vector<uint8_t> out((bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) out[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
    }
    return out;
}

inline std::vector<uint8_t> unpack_bits(const std::vector<uint8_t>& bytes, size_t n_bits) {
    std::vector<uint8_t> out(n_bits, 0);
    for (size_t i = 0; i < n_bits; ++i) {
        out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    }
    return out;
}

} // namespace finadapt::binio
