#include "cdapf/transfer.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdapf/error.hpp"

namespace cdapf {
namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

// Offset inside the logarithm so black stays finite: log10(LMS + 1/255).
constexpr double kLogOffset = 1.0 / 255.0;

struct LmsSpace {
  Matrix3d rgb_to_lms;
  Matrix3d lms_to_rgb;
  Matrix3d log_to_lab;
  Matrix3d lab_to_log;
};

const LmsSpace& lms_space() {
  static const LmsSpace space = [] {
    LmsSpace s;
    s.rgb_to_lms << 0.3811, 0.5783, 0.0402,  //
        0.1967, 0.7244, 0.0782,              //
        0.0241, 0.1288, 0.8444;
    s.lms_to_rgb = s.rgb_to_lms.inverse();
    Matrix3d mix;
    mix << 1, 1, 1,  //
        1, 1, -2,    //
        1, -1, 0;
    const Vector3d scale(1.0 / std::sqrt(3.0), 1.0 / std::sqrt(6.0), 1.0 / std::sqrt(2.0));
    s.log_to_lab = scale.asDiagonal() * mix;
    s.lab_to_log = s.log_to_lab.inverse();
    return s;
  }();
  return space;
}

Matrix3d to_eigen(const Mat3& m) {
  Matrix3d out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = m[r][c];
  return out;
}

Mat3 from_eigen(const Matrix3d& m) {
  Mat3 out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r][c] = m(r, c);
  return out;
}

// Q f(max(lambda, floor)) Q^T for a symmetric matrix.
Matrix3d spectral_power(const Matrix3d& sym, double floor, double exponent) {
  Eigen::SelfAdjointEigenSolver<Matrix3d> solver(sym);
  Vector3d d = solver.eigenvalues();
  for (int i = 0; i < 3; ++i) d[i] = std::pow(std::max(d[i], floor), exponent);
  return solver.eigenvectors() * d.asDiagonal() * solver.eigenvectors().transpose();
}

void check_stats(const ColorStats& s, const char* which) {
  if (s.n == 0) throw Error(ErrorCode::InvalidArgument, std::string(which) + " stats are empty");
}

template <typename Fn>
FloatImage map_working(const RgbImage& content, ColorSpace space, Fn&& fn) {
  FloatImage img = to_working(content, space);
  for (std::size_t i = 0; i < img.values.size(); i += 3) {
    const Vec3 out = fn(Vec3{img.values[i], img.values[i + 1], img.values[i + 2]});
    img.values[i] = out[0];
    img.values[i + 1] = out[1];
    img.values[i + 2] = out[2];
  }
  return img;
}

}  // namespace

std::string_view method_name(TransferMethod m) {
  return m == TransferMethod::MeanStd ? "mean_std" : "wct";
}

std::optional<TransferMethod> parse_method(std::string_view name) {
  if (name == "mean_std") return TransferMethod::MeanStd;
  if (name == "wct") return TransferMethod::Wct;
  return std::nullopt;
}

Vec3 to_working(Rgb c, ColorSpace space) {
  const Vector3d rgb(c.r / 255.0, c.g / 255.0, c.b / 255.0);
  if (space == ColorSpace::Rgb) return {rgb[0], rgb[1], rgb[2]};
  const auto& s = lms_space();
  const Vector3d lms = s.rgb_to_lms * rgb;
  const Vector3d log_lms(std::log10(lms[0] + kLogOffset), std::log10(lms[1] + kLogOffset),
                         std::log10(lms[2] + kLogOffset));
  const Vector3d lab = s.log_to_lab * log_lms;
  return {lab[0], lab[1], lab[2]};
}

Vec3 from_working(const Vec3& v, ColorSpace space) {
  if (space == ColorSpace::Rgb) return {v[0] * 255.0, v[1] * 255.0, v[2] * 255.0};
  const auto& s = lms_space();
  const Vector3d log_lms = s.lab_to_log * Vector3d(v[0], v[1], v[2]);
  const Vector3d lms(std::pow(10.0, log_lms[0]) - kLogOffset, std::pow(10.0, log_lms[1]) - kLogOffset,
                     std::pow(10.0, log_lms[2]) - kLogOffset);
  const Vector3d rgb = s.lms_to_rgb * lms;
  return {rgb[0] * 255.0, rgb[1] * 255.0, rgb[2] * 255.0};
}

FloatImage to_working(const RgbImage& image, ColorSpace space) {
  FloatImage out{image.width(), image.height(), {}};
  out.values.resize(image.pixel_count() * 3);
  const auto px = image.bytes();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const Vec3 v = to_working(Rgb{px[i], px[i + 1], px[i + 2]}, space);
    out.values[i] = v[0];
    out.values[i + 1] = v[1];
    out.values[i + 2] = v[2];
  }
  return out;
}

RgbImage to_rgb8(const FloatImage& image, ColorSpace space) {
  RgbImage out(image.width, image.height);
  auto px = out.bytes();
  for (std::size_t i = 0; i < image.values.size(); i += 3) {
    const Vec3 rgb = from_working({image.values[i], image.values[i + 1], image.values[i + 2]}, space);
    for (int c = 0; c < 3; ++c) {
      const double v = std::isfinite(rgb[c]) ? rgb[c] : 0.0;
      px[i + c] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

ColorStats compute_color_stats(const FloatImage& image, const BinaryMask* mask) {
  if (mask && (mask->width() != image.width || mask->height() != image.height))
    throw Error(ErrorCode::DimensionMismatch, "color stats: mask size differs from the image");
  auto selected = [&](int x, int y) { return !mask || mask->test(x, y); };

  ColorStats stats;
  Vec3 sum{};
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (selected(x, y)) {
        const Vec3 v = image.at(x, y);
        for (int c = 0; c < 3; ++c) sum[c] += v[c];
        ++stats.n;
      }
  if (stats.n == 0) throw Error(ErrorCode::EmptyMask, "color stats over an empty selection");
  const double n = static_cast<double>(stats.n);
  for (int c = 0; c < 3; ++c) stats.mean[c] = sum[c] / n;

  Mat3 acc{};
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      if (selected(x, y)) {
        const Vec3 v = image.at(x, y);
        const Vec3 d{v[0] - stats.mean[0], v[1] - stats.mean[1], v[2] - stats.mean[2]};
        for (int r = 0; r < 3; ++r)
          for (int c = r; c < 3; ++c) acc[r][c] += d[r] * d[c];
      }
  for (int r = 0; r < 3; ++r)
    for (int c = r; c < 3; ++c) stats.cov[r][c] = stats.cov[c][r] = acc[r][c] / n;

  // Rounding can leave a tiny negative eigenvalue; clamp it to zero.
  Eigen::SelfAdjointEigenSolver<Matrix3d> solver(to_eigen(stats.cov));
  if (solver.eigenvalues().minCoeff() < 0.0) {
    const Vector3d d = solver.eigenvalues().cwiseMax(0.0);
    Matrix3d fixed = solver.eigenvectors() * d.asDiagonal() * solver.eigenvectors().transpose();
    fixed = 0.5 * (fixed + fixed.transpose());
    stats.cov = from_eigen(fixed);
  }
  return stats;
}

ColorStats compute_color_stats(const RgbImage& image, const BinaryMask* mask, ColorSpace space) {
  if (mask && (mask->width() != image.width() || mask->height() != image.height()))
    throw Error(ErrorCode::DimensionMismatch, "color stats: mask size differs from the image");
  return compute_color_stats(to_working(image, space), mask);
}

FloatImage mean_std_transfer_working(const RgbImage& content, const ColorStats& content_stats,
                                     const ColorStats& style_stats, double epsilon) {
  check_stats(content_stats, "content");
  check_stats(style_stats, "style");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  Vec3 gain{};
  for (int c = 0; c < 3; ++c) {
    const double sc = std::sqrt(std::max(content_stats.cov[c][c], 0.0));
    const double ss = std::sqrt(std::max(style_stats.cov[c][c], 0.0));
    const double denom = std::max(sc, epsilon);
    gain[c] = denom > 0.0 ? ss / denom : 0.0;
  }
  const Vec3 mu_c = content_stats.mean;
  const Vec3 mu_s = style_stats.mean;
  return map_working(content, ColorSpace::LogLms, [&](const Vec3& v) {
    return Vec3{(v[0] - mu_c[0]) * gain[0] + mu_s[0], (v[1] - mu_c[1]) * gain[1] + mu_s[1],
                (v[2] - mu_c[2]) * gain[2] + mu_s[2]};
  });
}

Mat3 wct_matrix(const Mat3& content_cov, const Mat3& style_cov, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  const Matrix3d cc = to_eigen(content_cov);
  const Matrix3d cs = to_eigen(style_cov);
  // A zero floor with a singular content covariance would divide by zero.
  const double floor = std::max(epsilon, std::numeric_limits<double>::min());
  const Matrix3d whiten = spectral_power(0.5 * (cc + cc.transpose()), floor, -0.5);
  const Matrix3d color = spectral_power(0.5 * (cs + cs.transpose()), floor, 0.5);
  return from_eigen(color * whiten);
}

FloatImage wct_transfer_working(const RgbImage& content, const ColorStats& content_stats,
                                const ColorStats& style_stats, double epsilon) {
  check_stats(content_stats, "content");
  check_stats(style_stats, "style");
  const Matrix3d a = to_eigen(wct_matrix(content_stats.cov, style_stats.cov, epsilon));
  const Vector3d mu_c(content_stats.mean[0], content_stats.mean[1], content_stats.mean[2]);
  const Vector3d mu_s(style_stats.mean[0], style_stats.mean[1], style_stats.mean[2]);
  return map_working(content, ColorSpace::Rgb, [&](const Vec3& v) {
    const Vector3d out = a * (Vector3d(v[0], v[1], v[2]) - mu_c) + mu_s;
    return Vec3{out[0], out[1], out[2]};
  });
}

RgbImage mean_std_transfer(const RgbImage& content, const ColorStats& content_stats,
                           const ColorStats& style_stats, double epsilon) {
  return to_rgb8(mean_std_transfer_working(content, content_stats, style_stats, epsilon),
                 ColorSpace::LogLms);
}

RgbImage wct_transfer(const RgbImage& content, const ColorStats& content_stats,
                      const ColorStats& style_stats, double epsilon) {
  return to_rgb8(wct_transfer_working(content, content_stats, style_stats, epsilon), ColorSpace::Rgb);
}

RgbImage stylize_image(const RgbImage& content, const BinaryMask& target_mask,
                       const RgbImage& style, const StyleSpec& spec) {
  if (spec.target_part == SegmentClass::Background)
    throw Error(ErrorCode::ValidationFailed, "target part cannot be background");
  if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon))
    throw Error(ErrorCode::InvalidArgument, "epsilon must be finite and >= 0");
  if (target_mask.width() != content.width() || target_mask.height() != content.height())
    throw Error(ErrorCode::DimensionMismatch, "target mask size differs from the content image");
  if (target_mask.empty())
    throw Error(ErrorCode::MissingPart,
                "content has no pixels for " + std::string(class_name(spec.target_part)),
                {{"part", class_name(spec.target_part)}});
  if (style.empty()) throw Error(ErrorCode::InvalidImage, "style image is empty");
  const BinaryMask* style_mask = nullptr;
  if (spec.style_mask) {
    if (spec.style_mask->width() != style.width() || spec.style_mask->height() != style.height())
      throw Error(ErrorCode::DimensionMismatch, "style mask size differs from the style image");
    if (spec.style_mask->empty()) throw Error(ErrorCode::EmptyStyleMask, "style mask selects no pixels");
    style_mask = &*spec.style_mask;
  }

  const ColorSpace space = working_space(spec.method);
  const ColorStats content_stats = compute_color_stats(content, &target_mask, space);
  const ColorStats style_stats = compute_color_stats(style, style_mask, space);
  const RgbImage stylized = spec.method == TransferMethod::MeanStd
                                ? mean_std_transfer(content, content_stats, style_stats, spec.epsilon)
                                : wct_transfer(content, content_stats, style_stats, spec.epsilon);
  return composite_over(content, stylized, target_mask);
}

StylizeResult stylize(const RgbImage& content, const BinaryMask& target_mask, const RgbImage& style,
                      const StyleSpec& spec, std::string content_ref) {
  StylizeResult out;
  out.image = stylize_image(content, target_mask, style, spec);
  out.content_ref = std::move(content_ref);
  out.style_ref = spec.style_image_ref;
  out.spec = spec;
  return out;
}

}  // namespace cdapf
