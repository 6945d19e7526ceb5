#include "cdapf/image.hpp"

#include "cdapf/error.hpp"

namespace cdapf {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0)
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be non-negative");
  pixels_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

}  // namespace cdapf
