#include "cdapf/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "cdapf/error.hpp"

namespace cdapf {
namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* op) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch,
                std::string(op) + ": mask sizes differ (" + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + ")");
}

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, const char* name, Op op) {
  require_same_dims(a, b, name);
  BinaryMask out(a.width(), a.height());
  auto dst = out.words();
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = op(wa[i], wb[i]);
  out.clear_padding();
  return out;
}

void require_image_dims(const RgbImage& image, const BinaryMask& mask, const char* op) {
  if (image.width() != mask.width() || image.height() != mask.height())
    throw Error(ErrorCode::DimensionMismatch,
                std::string(op) + ": image is " + std::to_string(image.width()) + "x" +
                    std::to_string(image.height()) + " but mask is " +
                    std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
}

}  // namespace

// --- BinaryMask --------------------------------------------------------------

BinaryMask::BinaryMask(int width, int height, bool value) : width_(width), height_(height) {
  if (width < 0 || height < 0)
    throw Error(ErrorCode::InvalidArgument, "mask dimensions must be non-negative");
  words_.assign((bit_count() + 63) / 64, value ? ~std::uint64_t{0} : 0);
  clear_padding();
}

void BinaryMask::clear_padding() noexcept {
  const std::size_t tail = bit_count() & 63;
  if (tail != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << tail) - 1;
}

void BinaryMask::set_run(int y, int x_begin, int x_end) noexcept {
  if (x_begin >= x_end) return;
  std::size_t i = linear(x_begin, y);
  const std::size_t end = linear(x_end - 1, y) + 1;
  while (i < end && (i & 63) != 0) {
    words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    ++i;
  }
  while (i + 64 <= end) {
    words_[i >> 6] = ~std::uint64_t{0};
    i += 64;
  }
  while (i < end) {
    words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    ++i;
  }
}

std::uint64_t BinaryMask::area() const noexcept {
  std::uint64_t n = 0;
  for (const auto w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
  return n;
}

bool BinaryMask::empty() const noexcept {
  return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

// --- MaskSet -----------------------------------------------------------------

const BinaryMask* MaskSet::find(SegmentClass cls) const {
  const auto it = masks_.find(cls);
  return it == masks_.end() ? nullptr : &it->second;
}

BinaryMask MaskSet::get_or_empty(SegmentClass cls) const {
  if (const auto* m = find(cls)) return *m;
  return BinaryMask(dims_.width, dims_.height);
}

void MaskSet::set(SegmentClass cls, BinaryMask mask) {
  if (mask.dims() != dims_)
    throw Error(ErrorCode::DimensionMismatch, "mask size does not match the mask set");
  masks_.insert_or_assign(cls, std::move(mask));
}

void MaskSet::unite(SegmentClass cls, const BinaryMask& mask) {
  if (mask.dims() != dims_)
    throw Error(ErrorCode::DimensionMismatch, "mask size does not match the mask set");
  auto it = masks_.find(cls);
  if (it == masks_.end())
    masks_.emplace(cls, mask);
  else
    it->second = mask_union(it->second, mask);
}

void MaskSet::recompute_background() {
  BinaryMask parts(dims_.width, dims_.height);
  for (const auto& [cls, m] : masks_)
    if (cls != SegmentClass::Background) parts = mask_union(parts, m);
  masks_.insert_or_assign(SegmentClass::Background, mask_complement(parts));
}

// --- rasterization -------------------------------------------------------------

BinaryMask rasterize_polygon(const PolygonRegion& region, Dims dims) {
  if (dims.width < 1 || dims.height < 1)
    throw Error(ErrorCode::DimensionMismatch, "raster dimensions must be at least 1x1");
  for (const auto& p : region.vertices)
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0 || p.y < 0 || p.x > dims.width ||
        p.y > dims.height)
      throw Error(ErrorCode::DimensionMismatch, "polygon vertex lies outside the raster");

  BinaryMask mask(dims.width, dims.height);
  const auto& v = region.vertices;
  const std::size_t n = v.size();
  if (n < 3) return mask;

  std::vector<double> crossings;
  crossings.reserve(n);
  for (int row = 0; row < dims.height; ++row) {
    const double yc = row + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = v[i];
      const Point& b = v[j];
      if ((a.y <= yc) != (b.y <= yc))
        crossings.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    if (crossings.size() < 2) continue;
    std::sort(crossings.begin(), crossings.end());
    // Centers with an odd number of crossings at x <= xc: [c0, c1), [c2, c3), ...
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const double lo = crossings[k];
      const double hi = crossings[k + 1];
      int x0 = static_cast<int>(std::clamp(std::ceil(lo - 0.5), 0.0, double(dims.width)));
      while (x0 > 0 && x0 - 1 + 0.5 >= lo) --x0;
      while (x0 < dims.width && x0 + 0.5 < lo) ++x0;
      int x1 = static_cast<int>(std::clamp(std::ceil(hi - 0.5), 0.0, double(dims.width)));
      while (x1 > 0 && x1 - 1 + 0.5 >= hi) --x1;
      while (x1 < dims.width && x1 + 0.5 < hi) ++x1;
      mask.set_run(row, x0, x1);
    }
  }
  return mask;
}

MaskSet rasterize_apparel(const AnnotatedApparel& apparel) {
  MaskSet set(apparel.width, apparel.height);
  const Dims dims{apparel.width, apparel.height};
  for (const auto& region : apparel.regions) {
    if (region.cls == SegmentClass::Background)
      throw Error(ErrorCode::UnknownClass, "background cannot carry a polygon region");
    set.unite(region.cls, rasterize_polygon(region, dims));
  }
  set.recompute_background();
  return set;
}

// --- mask algebra ----------------------------------------------------------------

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "mask_union", [](auto x, auto y) { return x | y; });
}

BinaryMask mask_union(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw Error(ErrorCode::InvalidArgument, "mask_union needs at least one mask");
  BinaryMask out = masks.front();
  for (std::size_t i = 1; i < masks.size(); ++i) out = mask_union(out, masks[i]);
  return out;
}

BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "mask_intersect", [](auto x, auto y) { return x & y; });
}

BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "mask_subtract", [](auto x, auto y) { return x & ~y; });
}

BinaryMask mask_complement(const BinaryMask& a) {
  BinaryMask out(a.width(), a.height());
  auto dst = out.words();
  const auto src = a.words();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = ~src[i];
  out.clear_padding();
  return out;
}

// --- pixel selection ---------------------------------------------------------------

RgbImage extract(const RgbImage& image, const BinaryMask& mask, const Canvas& canvas) {
  require_image_dims(image, mask, "extract");
  if (canvas.width != image.width() || canvas.height != image.height())
    throw Error(ErrorCode::DimensionMismatch, "extract: canvas size differs from the image");
  RgbImage out(canvas.width, canvas.height, canvas.fill);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (mask.test(x, y)) out.set(x, y, image.at(x, y));
  return out;
}

RgbImage composite_over(const RgbImage& base, const RgbImage& src, const BinaryMask& mask) {
  require_image_dims(base, mask, "composite_over");
  require_image_dims(src, mask, "composite_over");
  RgbImage out = base;
  for (int y = 0; y < base.height(); ++y)
    for (int x = 0; x < base.width(); ++x)
      if (mask.test(x, y)) out.set(x, y, src.at(x, y));
  return out;
}

}  // namespace cdapf

namespace cdapf {

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (width < 1 || height < 1 || image.empty())
    throw Error(ErrorCode::InvalidArgument, "resize: dimensions must be at least 1x1");
  if (width == image.width() && height == image.height()) return image;
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  const int max_x = image.width() - 1;
  const int max_y = image.height() - 1;
  RgbImage out(width, height);
  const auto src = image.bytes();
  const std::size_t stride = static_cast<std::size_t>(image.width()) * 3;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(max_y));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, max_y);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(max_x));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, max_x);
      const double wx = fx - x0;
      std::uint8_t px[3];
      for (int c = 0; c < 3; ++c) {
        const double p00 = src[y0 * stride + x0 * 3 + c];
        const double p01 = src[y0 * stride + x1 * 3 + c];
        const double p10 = src[y1 * stride + x0 * 3 + c];
        const double p11 = src[y1 * stride + x1 * 3 + c];
        const double top = p00 + (p01 - p00) * wx;
        const double bottom = p10 + (p11 - p10) * wx;
        px[c] = static_cast<std::uint8_t>(std::clamp(std::floor(top + (bottom - top) * wy + 0.5), 0.0, 255.0));
      }
      out.set(x, y, {px[0], px[1], px[2]});
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::InvalidArgument, "resize: dimensions must be at least 1x1");
  if (width == mask.width() && height == mask.height()) return mask;
  BinaryMask out(width, height);
  const auto w = static_cast<std::int64_t>(mask.width());
  const auto h = static_cast<std::int64_t>(mask.height());
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(std::min(h - 1, ((2 * std::int64_t{y} + 1) * h) / (2 * std::int64_t{height})));
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>(std::min(w - 1, ((2 * std::int64_t{x} + 1) * w) / (2 * std::int64_t{width})));
      if (mask.test(sx, sy)) out.set(x, y);
    }
  }
  return out;
}

}  // namespace cdapf
