#include "fabula/png.hpp"

#include "fabula/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>

namespace fabula::png {
namespace {

constexpr std::array<std::uint8_t, 8> signature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
    out.push_back(static_cast<std::uint8_t>(value >> 24U));
    out.push_back(static_cast<std::uint8_t>(value >> 16U));
    out.push_back(static_cast<std::uint8_t>(value >> 8U));
    out.push_back(static_cast<std::uint8_t>(value));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t pos) {
    return (static_cast<std::uint32_t>(bytes[pos]) << 24U) |
           (static_cast<std::uint32_t>(bytes[pos + 1]) << 16U) |
           (static_cast<std::uint32_t>(bytes[pos + 2]) << 8U) | bytes[pos + 3];
}

void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5],
               std::span<const std::uint8_t> data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const auto type_begin = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + type_begin, static_cast<uInt>(4 + data.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

bool has_signature(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= signature.size() &&
           std::equal(signature.begin(), signature.end(), bytes.begin());
}

std::vector<std::uint8_t> encode_rgb(std::uint32_t width, std::uint32_t height,
                                     std::span<const std::uint8_t> pixels,
                                     const std::map<std::string, std::string>& text) {
    if (width == 0 || height == 0 || pixels.size() != std::size_t{width} * height * 3) {
        throw InvalidArgument("png: pixel buffer does not match dimensions");
    }
    std::vector<std::uint8_t> out(signature.begin(), signature.end());

    std::vector<std::uint8_t> header;
    put_u32(header, width);
    put_u32(header, height);
    header.insert(header.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, no interlace
    put_chunk(out, "IHDR", header);

    for (const auto& [key, value] : text) {
        std::vector<std::uint8_t> data(key.begin(), key.end());
        data.push_back(0);
        data.insert(data.end(), value.begin(), value.end());
        put_chunk(out, "tEXt", data);
    }

    const std::size_t stride = std::size_t{width} * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * height);
    for (std::uint32_t row = 0; row < height; ++row) {
        raw.push_back(0);  // filter: none
        const auto begin = pixels.begin() + static_cast<std::ptrdiff_t>(row * stride);
        raw.insert(raw.end(), begin, begin + static_cast<std::ptrdiff_t>(stride));
    }
    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(compressed_size);
    if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                  Z_BEST_SPEED) != Z_OK) {
        throw Error(ErrorCode::backend_error, "png: zlib compression failed");
    }
    compressed.resize(compressed_size);
    put_chunk(out, "IDAT", compressed);
    put_chunk(out, "IEND", {});
    return out;
}

std::map<std::string, std::string> read_text_chunks(std::span<const std::uint8_t> png) {
    std::map<std::string, std::string> out;
    if (!has_signature(png)) return out;
    std::size_t pos = signature.size();
    while (pos + 12 <= png.size()) {
        const auto length = get_u32(png, pos);
        if (pos + 12 + length > png.size()) break;
        const std::string type(png.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                               png.begin() + static_cast<std::ptrdiff_t>(pos + 8));
        if (type == "tEXt") {
            const auto data = png.subspan(pos + 8, length);
            const auto nul = std::find(data.begin(), data.end(), std::uint8_t{0});
            if (nul != data.end()) {
                out.emplace(std::string(data.begin(), nul), std::string(nul + 1, data.end()));
            }
        }
        if (type == "IEND") break;
        pos += 12 + length;
    }
    return out;
}

}  // namespace fabula::png
