#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Text utilities: tolerant UTF-8 decoding with Latin-1 fallback, percent
// decoding, and the character-script classification behind the non-Latin
// filter. Lengths recorded in the log count characters, not bytes, so all
// counting here is code-point based.

namespace surfminer {

inline bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        if (c < 0x80) extra = 0;
        else if ((c & 0xE0) == 0xC0) extra = 1;
        else if ((c & 0xF0) == 0xE0) extra = 2;
        else if ((c & 0xF8) == 0xF0) extra = 3;
        else return false;
        if (extra == 1 && c < 0xC2) return false;  // overlong
        for (std::size_t k = 1; k <= extra; ++k) {
            if (i + k >= s.size()) return false;
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        }
        i += extra + 1;
    }
    return true;
}

inline std::string latin1_to_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (c < 0x80) {
            out += static_cast<char>(c);
        } else {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

// Tolerant decode: an invalid byte is taken as its Latin-1 code point and
// the scan advances one byte, so decoding never fails.
inline std::vector<char32_t> utf8_decode(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        char32_t cp;
        if (c < 0x80) { extra = 0; cp = c; }
        else if ((c & 0xE0) == 0xC0) { extra = 1; cp = c & 0x1F; }
        else if ((c & 0xF0) == 0xE0) { extra = 2; cp = c & 0x0F; }
        else if ((c & 0xF8) == 0xF0) { extra = 3; cp = c & 0x07; }
        else { out.push_back(c); ++i; continue; }
        if (i + extra >= s.size()) { out.push_back(c); ++i; continue; }
        bool ok = true;
        for (std::size_t k = 1; k <= extra; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) { out.push_back(c); ++i; continue; }
        out.push_back(cp);
        i += extra + 1;
    }
    return out;
}

inline std::string utf8_encode(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

inline std::string utf8_encode(const std::vector<char32_t>& cps) {
    std::string out;
    for (char32_t cp : cps) out += utf8_encode(cp);
    return out;
}

inline std::size_t utf8_char_count(std::string_view s) {
    return utf8_decode(s).size();
}

inline std::string percent_decode(std::string_view s) {
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int hi = hex(s[i + 1]), lo = hex(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out += static_cast<char>((hi << 4) | lo);
                i += 2;
                continue;
            }
        }
        out += s[i];
    }
    return out;
}

namespace detail {

struct CpRange {
    char32_t lo, hi;
};

// Letter blocks of the major non-Latin scripts. Everything outside these
// ranges is treated as Latin, Common or Inherited. CJK symbol/punctuation
// blocks (U+3000..303F) stay Common on purpose.
inline constexpr std::array<CpRange, 44> kNonLatinRanges{{
    {0x0370, 0x03FF},  // Greek
    {0x0400, 0x052F},  // Cyrillic
    {0x0530, 0x058F},  // Armenian
    {0x0590, 0x05FF},  // Hebrew
    {0x0600, 0x06FF},  // Arabic
    {0x0700, 0x074F},  // Syriac
    {0x0750, 0x077F},  // Arabic Supplement
    {0x0780, 0x07BF},  // Thaana
    {0x07C0, 0x07FF},  // NKo
    {0x0800, 0x085F},  // Samaritan, Mandaic
    {0x08A0, 0x08FF},  // Arabic Extended-A
    {0x0900, 0x0DFF},  // Devanagari .. Sinhala
    {0x0E00, 0x0E7F},  // Thai
    {0x0E80, 0x0EFF},  // Lao
    {0x0F00, 0x0FFF},  // Tibetan
    {0x1000, 0x109F},  // Myanmar
    {0x10A0, 0x10FF},  // Georgian
    {0x1100, 0x11FF},  // Hangul Jamo
    {0x1200, 0x139F},  // Ethiopic
    {0x13A0, 0x13FF},  // Cherokee
    {0x1400, 0x167F},  // Canadian Aboriginal
    {0x1680, 0x169F},  // Ogham
    {0x16A0, 0x16FF},  // Runic
    {0x1780, 0x17FF},  // Khmer
    {0x1800, 0x18AF},  // Mongolian
    {0x1900, 0x194F},  // Limbu
    {0x1980, 0x19DF},  // New Tai Lue
    {0x1A00, 0x1A1F},  // Buginese
    {0x1B00, 0x1B7F},  // Balinese
    {0x1C80, 0x1C8F},  // Cyrillic Extended-C
    {0x1C90, 0x1CBF},  // Georgian Extended
    {0x1F00, 0x1FFF},  // Greek Extended
    {0x2D30, 0x2D7F},  // Tifinagh
    {0x2DE0, 0x2DFF},  // Cyrillic Extended-A
    {0x2E80, 0x2FDF},  // CJK Radicals, Kangxi
    {0x3040, 0x30FF},  // Hiragana, Katakana
    {0x3130, 0x318F},  // Hangul Compatibility Jamo
    {0x31F0, 0x31FF},  // Katakana Phonetic Extensions
    {0x3400, 0x9FFF},  // CJK Unified Ideographs (+ext A)
    {0xA640, 0xA69F},  // Cyrillic Extended-B
    {0xA960, 0xA97F},  // Hangul Jamo Extended-A
    {0xAC00, 0xD7FF},  // Hangul Syllables (+Jamo Extended-B)
    {0xF900, 0xFAFF},  // CJK Compatibility Ideographs
    {0xFB13, 0xFEFC},  // Armenian/Hebrew/Arabic presentation forms
}};

}  // namespace detail

inline bool is_non_latin_char(char32_t cp) {
    if (cp < 0x0370) return false;  // ASCII, Latin-1, Latin Extended, IPA, combining marks
    if (cp >= 0x20000) return true;  // CJK extension planes
    for (const auto& r : detail::kNonLatinRanges) {
        if (cp >= r.lo && cp <= r.hi) return true;
    }
    return false;
}

inline bool contains_non_latin(std::string_view utf8) {
    for (char32_t cp : utf8_decode(utf8)) {
        if (is_non_latin_char(cp)) return true;
    }
    return false;
}

inline std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
    return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    std::string h = to_lower_ascii(haystack);
    std::string n = to_lower_ascii(needle);
    return h.find(n) != std::string::npos;
}

}  // namespace surfminer
