#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdapf/image.hpp"

namespace cdapf {

class BinaryMask;

// Decodes any PNG libpng understands into 8-bit RGB. Alpha is dropped and
// grayscale is expanded. Throws Error(InvalidImage).
RgbImage decode_png(std::span<const std::uint8_t> bytes);

// Encoding is deterministic: fixed compression settings and no ancillary
// chunks, so equal rasters always produce equal bytes.
std::vector<std::uint8_t> encode_png(const RgbImage& image);

// 8-bit grayscale, 0 = unset, 255 = set.
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);

// Any nonzero sample in any channel marks the pixel as set.
BinaryMask decode_mask_png(std::span<const std::uint8_t> bytes);

// 16-bit grayscale raster (used for provenance label maps).
std::vector<std::uint8_t> encode_gray16_png(int width, int height,
                                            std::span<const std::uint16_t> samples);
std::vector<std::uint16_t> decode_gray16_png(std::span<const std::uint8_t> bytes, int& width,
                                             int& height);

}  // namespace cdapf
