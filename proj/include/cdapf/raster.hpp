#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <vector>

#include "cdapf/annotation.hpp"
#include "cdapf/image.hpp"
#include "cdapf/segment_class.hpp"

namespace cdapf {

// Row-major bitset at image resolution. Bit (x, y) lives at linear index
// y * width + x, packed LSB-first into 64-bit words. Bits past width*height
// in the last word are always zero.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false);

  static BinaryMask full(int width, int height) { return BinaryMask(width, height, true); }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Dims dims() const noexcept { return {width_, height_}; }
  std::size_t bit_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  bool test(int x, int y) const noexcept {
    const std::size_t i = linear(x, y);
    return (words_[i >> 6] >> (i & 63)) & 1U;
  }
  void set(int x, int y, bool value = true) noexcept {
    const std::size_t i = linear(x, y);
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (value)
      words_[i >> 6] |= bit;
    else
      words_[i >> 6] &= ~bit;
  }
  // Sets pixels [x_begin, x_end) of row y.
  void set_run(int y, int x_begin, int x_end) noexcept;

  std::uint64_t area() const noexcept;
  bool empty() const noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }
  // Clears the padding bits after mutating words() directly.
  void clear_padding() noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t linear(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> words_;
};

// Per-class masks sharing one size. The background entry, once computed,
// is the complement of the union of every other class.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(int width, int height) : dims_{width, height} {}

  Dims dims() const noexcept { return dims_; }
  int width() const noexcept { return dims_.width; }
  int height() const noexcept { return dims_.height; }

  const BinaryMask* find(SegmentClass cls) const;
  bool contains(SegmentClass cls) const { return find(cls) != nullptr; }
  // Missing classes come back as an empty mask.
  BinaryMask get_or_empty(SegmentClass cls) const;

  // Throws DimensionMismatch when sizes differ.
  void set(SegmentClass cls, BinaryMask mask);
  void unite(SegmentClass cls, const BinaryMask& mask);
  void recompute_background();

  const std::map<SegmentClass, BinaryMask>& masks() const noexcept { return masks_; }

  friend bool operator==(const MaskSet&, const MaskSet&) = default;

 private:
  Dims dims_;
  std::map<SegmentClass, BinaryMask> masks_;
};

struct Canvas {
  int width = 1;
  int height = 1;
  Rgb fill = kWhite;

  friend bool operator==(const Canvas&, const Canvas&) = default;
};

// Pixel (i, j) is set iff its center (i + 0.5, j + 0.5) is inside the ring
// under the even-odd rule. An edge counts for a scanline when
// min_y <= yc < max_y, and a pixel is inside when an odd number of crossings
// lie at x <= xc. Centers on a left or top edge are in, on a right or bottom
// edge are out.
BinaryMask rasterize_polygon(const PolygonRegion& region, Dims dims);

// Per-class union of the region rasters plus the derived background.
MaskSet rasterize_apparel(const AnnotatedApparel& apparel);

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_union(std::span<const BinaryMask> masks);
BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_complement(const BinaryMask& a);

// Image where the mask is set, canvas fill elsewhere.
RgbImage extract(const RgbImage& image, const BinaryMask& mask, const Canvas& canvas);

// Hard select: src where the mask is set, base elsewhere.
RgbImage composite_over(const RgbImage& base, const RgbImage& src, const BinaryMask& mask);

// Resampling used for alignment and thumbnails. Sample positions are pixel
// centers: source coordinate = (dst + 0.5) * src_size / dst_size.
RgbImage resize_bilinear(const RgbImage& image, int width, int height);
BinaryMask resize_nearest(const BinaryMask& mask, int width, int height);

}  // namespace cdapf
