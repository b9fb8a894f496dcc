#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fabula {

/// ASCII lowercase; bytes >= 0x80 pass through.
std::string to_lower(std::string_view text);

std::string_view trim(std::string_view text) noexcept;

bool iequals(std::string_view a, std::string_view b) noexcept;

/// Lowercased runs of letters, digits, hyphens and word-internal apostrophes.
std::vector<std::string> lowercase_words(std::string_view text);

std::vector<std::string> split(std::string_view text, char separator);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

/// 64-bit FNV-1a; stable across platforms, used for mock determinism.
constexpr std::uint64_t fnv1a(std::string_view text,
                              std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept {
    std::uint64_t hash = seed;
    for (const char ch : text) {
        hash ^= static_cast<unsigned char>(ch);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

/// SplitMix64 finalizer, for mixing a seed with a hash.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

/// Maps 64 random bits to [0, 1) using the top 53 bits.
constexpr double unit_interval(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11U) * 0x1.0p-53;
}

std::string hex_encode(const std::vector<std::uint8_t>& bytes);
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
/// Throws ParseError on characters outside the base64 alphabet.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace fabula
