#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdapf/segment_class.hpp"

namespace cdapf {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Closed polygon ring; the last vertex connects back to the first.
struct PolygonRegion {
  SegmentClass cls = SegmentClass::Silhouette;
  std::vector<Point> vertices;

  friend bool operator==(const PolygonRegion&, const PolygonRegion&) = default;
};

struct AnnotatedApparel {
  std::string apparel_id;
  int width = 0;
  int height = 0;
  std::string image_ref;  // content address of the PNG, empty until stored
  std::vector<PolygonRegion> regions;

  friend bool operator==(const AnnotatedApparel&, const AnnotatedApparel&) = default;
};

struct Dims {
  int width = 0;
  int height = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

using DimsLookup = std::map<std::string, Dims, std::less<>>;

struct Violation {
  std::optional<std::size_t> region_index;
  std::string rule;
  std::string message;
};

// --- VIA project files -----------------------------------------------------
//
// Reads VIA 1.x/2.x JSON exports: either a full project (with
// "_via_img_metadata") or a bare annotation export keyed by "<filename><size>".
// The apparel id is the image filename without its extension. Image dims come
// from `dims`, never from the file. Only polygon regions are accepted; the
// part class is the region attribute "class" holding a lowercase name or a
// numeric id.
std::vector<AnnotatedApparel> parse_via_project(std::string_view bytes, const DimsLookup& dims);

// Emits a VIA 2.0 project that parse_via_project reads back to equal
// records. Throws Error(ValidationFailed) if any record is invalid.
std::string write_via_project(std::span<const AnnotatedApparel> apparels);

// Empty iff every invariant of AnnotatedApparel holds.
std::vector<Violation> validate_apparel(const AnnotatedApparel& apparel);

// Rules reported by validate_apparel.
inline constexpr std::string_view kRuleVertexCount = "vertex count < 3";
inline constexpr std::string_view kRuleOutOfBounds = "out of bounds";
inline constexpr std::string_view kRuleBackgroundRegion = "background region";
inline constexpr std::string_view kRuleDimensions = "invalid dimensions";
inline constexpr std::string_view kRuleApparelId = "empty apparel id";
inline constexpr std::string_view kRuleNonFinite = "non-finite vertex";

// --- dataset split -----------------------------------------------------------

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

// Shuffles with SplitMix64(seed) then cuts by floor(n * ratio); the leftover
// ids go one at a time to train, validation, test, train, ...
DatasetSplit split_dataset(std::span<const std::string> ids, SplitRatios ratios,
                           std::uint64_t seed);

// Partition sizes without the shuffle.
std::array<std::size_t, 3> split_sizes(std::size_t n, SplitRatios ratios);

}  // namespace cdapf
