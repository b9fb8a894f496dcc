#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fabula::png {

/// Encodes 8-bit RGB pixels (row-major, width * height * 3 bytes) as a PNG,
/// with optional tEXt metadata. Output is deterministic for equal inputs.
std::vector<std::uint8_t> encode_rgb(std::uint32_t width, std::uint32_t height,
                                     std::span<const std::uint8_t> pixels,
                                     const std::map<std::string, std::string>& text = {});

/// tEXt chunks of a PNG. Returns an empty map for anything that is not a PNG.
std::map<std::string, std::string> read_text_chunks(std::span<const std::uint8_t> png);

bool has_signature(std::span<const std::uint8_t> bytes);

}  // namespace fabula::png
