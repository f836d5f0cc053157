#pragma once

#include <cstdint>
#include <string_view>

namespace finadapt::uni {

// Decodes the UTF-8 sequence starting at `pos`; advances `pos` past it.
// Invalid bytes decode as themselves (one byte) so scanning is total on
// dirty input.
inline uint32_t next_codepoint(std::string_view s, size_t& pos) {
    const auto b0 = static_cast<uint8_t>(s[pos]);
    if (b0 < 0x80) {
        pos += 1;
        return b0;
    }
    int len = 0;
    uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { pos += 1; return b0; }
    if (pos + len > s.size()) { pos += 1; return b0; }
    for (int i = 1; i < len; ++i) {
        const auto bi = static_cast<uint8_t>(s[pos + i]);
        if ((bi & 0xC0) != 0x80) { pos += 1; return b0; }
        cp = (cp << 6) | (bi & 0x3F);
    }
    pos += len;
    return cp;
}

inline bool is_space(uint32_t cp) {
    return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 ||
           cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 ||
           cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

// Letter test over the blocks that occur in news text (Latin, Greek,
// Cyrillic, Armenian, Hebrew, Arabic, kana, CJK, Hangul). Not a full
// Unicode category table; anything outside these ranges counts as
// non-alphabetical, which is the conservative direction for the filter.
inline bool is_letter(uint32_t cp) {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z');
    static const struct { uint32_t lo, hi; } ranges[] = {
        {0xAA, 0xAA},     {0xB5, 0xB5},     {0xBA, 0xBA},
        {0xC0, 0xD6},     {0xD8, 0xF6},     {0xF8, 0x2C1},
        {0x370, 0x374},   {0x376, 0x377},   {0x37A, 0x37D},   {0x37F, 0x37F},
        {0x386, 0x386},   {0x388, 0x3FF},
        {0x400, 0x52F},   {0x531, 0x556},   {0x561, 0x587},
        {0x5D0, 0x5EA},   {0x620, 0x64A},
        {0x3040, 0x309F}, {0x30A0, 0x30FF},
        {0x4E00, 0x9FFF}, {0xAC00, 0xD7A3},
    };
    for (const auto& r : ranges) {
        if (cp >= r.lo && cp <= r.hi) return true;
    }
    return false;
}

inline bool is_ascii_upper(uint32_t cp) { return cp >= 'A' && cp <= 'Z'; }

inline bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

} // namespace finadapt::uni
