#include "cdapf/segment_class.hpp"

#include <charconv>

namespace cdapf {
namespace {

constexpr std::array<std::string_view, kSegmentClassCount> kNames = {
    "background", "silhouette", "collar",      "neck",           "print",
    "hemline",    "sleeve_right", "sleeve_left", "shoulder_right", "shoulder_left"};

constexpr std::array<std::string_view, kSegmentClassCount> kDisplayNames = {
    "Background", "Silhouette",   "Collar",      "Neck",           "Print",
    "Hemline",    "Sleeve-right", "Sleeve-left", "Shoulder-right", "Shoulder-left"};

}  // namespace

std::string_view class_name(SegmentClass c) { return kNames[static_cast<std::size_t>(c)]; }

std::string_view class_display_name(SegmentClass c) {
  return kDisplayNames[static_cast<std::size_t>(c)];
}

std::optional<SegmentClass> class_from_id(int id) {
  if (id < 0 || id >= kSegmentClassCount) return std::nullopt;
  return static_cast<SegmentClass>(id);
}

std::optional<SegmentClass> class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<SegmentClass>(i);
  return std::nullopt;
}

std::optional<SegmentClass> parse_class(std::string_view text) {
  if (!text.empty() && text.front() >= '0' && text.front() <= '9') {
    int id = -1;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return class_from_id(id);
  }
  return class_from_name(text);
}

}  // namespace cdapf
