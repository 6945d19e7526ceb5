#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace cdapf {

// The ten DeepAttributeStyle part classes. Ids are fixed and stable.
enum class SegmentClass : std::uint8_t {
  Background = 0,
  Silhouette = 1,
  Collar = 2,
  Neck = 3,
  Print = 4,
  Hemline = 5,
  SleeveRight = 6,
  SleeveLeft = 7,
  ShoulderRight = 8,
  ShoulderLeft = 9,
};

inline constexpr int kSegmentClassCount = 10;

inline constexpr std::array<SegmentClass, kSegmentClassCount> kAllSegmentClasses = {
    SegmentClass::Background,  SegmentClass::Silhouette,    SegmentClass::Collar,
    SegmentClass::Neck,        SegmentClass::Print,         SegmentClass::Hemline,
    SegmentClass::SleeveRight, SegmentClass::SleeveLeft,    SegmentClass::ShoulderRight,
    SegmentClass::ShoulderLeft};

constexpr int class_id(SegmentClass c) { return static_cast<int>(c); }

// Lowercase machine name, e.g. "sleeve_right".
std::string_view class_name(SegmentClass c);

// Report label in the style of the published IoU table, e.g. "Sleeve-right".
std::string_view class_display_name(SegmentClass c);

std::optional<SegmentClass> class_from_id(int id);
std::optional<SegmentClass> class_from_name(std::string_view name);

// Accepts either a lowercase name or a decimal id ("1", "sleeve_left").
std::optional<SegmentClass> parse_class(std::string_view text);

}  // namespace cdapf
