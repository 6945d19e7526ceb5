#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdapf/image.hpp"
#include "cdapf/raster.hpp"

namespace cdapf {

// Closed-form color-statistics transfer standing in for neural style
// transfer. mean_std matches per-channel mean and deviation in a log-LMS
// decorrelated space; wct matches the full RGB covariance with a
// whitening-coloring transform.

enum class ColorSpace {
  Rgb,     // channels / 255
  LogLms,  // Reinhard l-alpha-beta over log10(LMS + 1/255)
};

enum class TransferMethod { MeanStd, Wct };

std::string_view method_name(TransferMethod m);
std::optional<TransferMethod> parse_method(std::string_view name);

// Working space for each method.
constexpr ColorSpace working_space(TransferMethod m) {
  return m == TransferMethod::MeanStd ? ColorSpace::LogLms : ColorSpace::Rgb;
}

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct ColorStats {
  Vec3 mean{};
  Mat3 cov{};  // population (1/n), symmetric, PSD
  std::uint64_t n = 0;
};

// Float image in a working space, three interleaved channels.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Vec3 at(int x, int y) const {
    const std::size_t i =
        (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    return {values[i], values[i + 1], values[i + 2]};
  }
};

Vec3 to_working(Rgb c, ColorSpace space);
// Inverse of to_working, unclamped, in 0..255 units.
Vec3 from_working(const Vec3& v, ColorSpace space);

FloatImage to_working(const RgbImage& image, ColorSpace space);
// Inverse conversion, hard clamp to [0, 255] and round to nearest.
RgbImage to_rgb8(const FloatImage& image, ColorSpace space);

// Throws EmptyMask / DimensionMismatch.
ColorStats compute_color_stats(const RgbImage& image, const BinaryMask* mask,
                               ColorSpace space = ColorSpace::Rgb);
ColorStats compute_color_stats(const FloatImage& image, const BinaryMask* mask);

inline constexpr double kDefaultEpsilon = 1e-5;

// Results in the working space before the inverse conversion and clamp.
FloatImage mean_std_transfer_working(const RgbImage& content, const ColorStats& content_stats,
                                     const ColorStats& style_stats, double epsilon);
FloatImage wct_transfer_working(const RgbImage& content, const ColorStats& content_stats,
                                const ColorStats& style_stats, double epsilon);

// Stats must be in the method's working space.
RgbImage mean_std_transfer(const RgbImage& content, const ColorStats& content_stats,
                           const ColorStats& style_stats, double epsilon = kDefaultEpsilon);
RgbImage wct_transfer(const RgbImage& content, const ColorStats& content_stats,
                      const ColorStats& style_stats, double epsilon = kDefaultEpsilon);

// The linear map x' = A (x - mu_c) + mu_s used by wct_transfer.
Mat3 wct_matrix(const Mat3& content_cov, const Mat3& style_cov, double epsilon);

struct StyleSpec {
  std::string style_image_ref;
  TransferMethod method = TransferMethod::MeanStd;
  double epsilon = kDefaultEpsilon;
  SegmentClass target_part = SegmentClass::Silhouette;
  std::optional<BinaryMask> style_mask;
};

struct StylizeResult {
  RgbImage image;
  std::string content_ref;
  std::string style_ref;
  StyleSpec spec;
};

// Stylizes the whole content image with style statistics (from the style
// mask, when given), using content statistics from `target_mask`, then
// keeps the stylized pixels only inside `target_mask`. Pixels outside are
// copied bit-for-bit. Throws MissingPart, EmptyStyleMask, DimensionMismatch.
RgbImage stylize_image(const RgbImage& content, const BinaryMask& target_mask,
                       const RgbImage& style, const StyleSpec& spec);

StylizeResult stylize(const RgbImage& content, const BinaryMask& target_mask,
                      const RgbImage& style, const StyleSpec& spec, std::string content_ref = {});

}  // namespace cdapf
