#include "cdapf/png_io.hpp"

#include <png.h>

#include <cstring>
#include <memory>

#include "cdapf/error.hpp"
#include "cdapf/raster.hpp"

namespace cdapf {
namespace {

struct ImageGuard {
  png_image image{};
  ImageGuard() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

[[noreturn]] void fail(const png_image& image, const char* what) {
  throw Error(ErrorCode::InvalidImage,
              std::string(what) + ": " + (image.message[0] ? image.message : "libpng error"));
}

// Reads into the requested simplified-API format. Alpha, if present, is
// composited over `background`.
std::vector<std::uint8_t> read_formatted(std::span<const std::uint8_t> bytes,
                                         png_uint_32 format, png_color background,
                                         int& width, int& height) {
  if (bytes.empty()) throw Error(ErrorCode::InvalidImage, "empty PNG data");
  ImageGuard guard;
  if (!png_image_begin_read_from_memory(&guard.image, bytes.data(), bytes.size()))
    fail(guard.image, "cannot read PNG header");
  guard.image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(guard.image));
  if (!png_image_finish_read(&guard.image, &background, buffer.data(), 0, nullptr))
    fail(guard.image, "cannot decode PNG");
  width = static_cast<int>(guard.image.width);
  height = static_cast<int>(guard.image.height);
  return buffer;
}

std::vector<std::uint8_t> write_formatted(const void* pixels, int width, int height,
                                          png_uint_32 format) {
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::InvalidImage, "cannot encode an empty image");
  ImageGuard guard;
  guard.image.width = static_cast<png_uint_32>(width);
  guard.image.height = static_cast<png_uint_32>(height);
  guard.image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(guard.image, size, 0, pixels, 0, nullptr))
    fail(guard.image, "cannot size PNG");
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&guard.image, out.data(), &size, 0, pixels, 0, nullptr))
    fail(guard.image, "cannot encode PNG");
  out.resize(size);
  return out;
}

}  // namespace

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  int width = 0;
  int height = 0;
  const auto buffer = read_formatted(bytes, PNG_FORMAT_RGB, png_color{255, 255, 255}, width, height);
  RgbImage image(width, height);
  std::memcpy(image.bytes().data(), buffer.data(), buffer.size());
  return image;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  return write_formatted(image.bytes().data(), image.width(), image.height(), PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) {
  std::vector<std::uint8_t> gray(mask.bit_count());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      gray[static_cast<std::size_t>(y) * static_cast<std::size_t>(mask.width()) +
           static_cast<std::size_t>(x)] = mask.test(x, y) ? 255 : 0;
  return write_formatted(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

BinaryMask decode_mask_png(std::span<const std::uint8_t> bytes) {
  int width = 0;
  int height = 0;
  const auto buffer = read_formatted(bytes, PNG_FORMAT_RGB, png_color{0, 0, 0}, width, height);
  BinaryMask mask(width, height);
  std::size_t i = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x, i += 3)
      if (buffer[i] | buffer[i + 1] | buffer[i + 2]) mask.set(x, y);
  return mask;
}

std::vector<std::uint8_t> encode_gray16_png(int width, int height,
                                            std::span<const std::uint16_t> samples) {
  if (samples.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::DimensionMismatch, "sample count does not match dimensions");
  return write_formatted(samples.data(), width, height, PNG_FORMAT_LINEAR_Y);
}

std::vector<std::uint16_t> decode_gray16_png(std::span<const std::uint8_t> bytes, int& width,
                                             int& height) {
  const auto buffer =
      read_formatted(bytes, PNG_FORMAT_LINEAR_Y, png_color{0, 0, 0}, width, height);
  std::vector<std::uint16_t> samples(buffer.size() / 2);
  std::memcpy(samples.data(), buffer.data(), samples.size() * 2);
  return samples;
}

}  // namespace cdapf
