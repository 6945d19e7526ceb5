#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdapf/annotation.hpp"
#include "cdapf/image.hpp"
#include "cdapf/raster.hpp"

namespace cdapf {

struct MergeStep {
  std::string apparel_id;
  SegmentClass part = SegmentClass::Silhouette;

  friend bool operator==(const MergeStep&, const MergeStep&) = default;
};

// The base contributes its silhouette; steps are painted over it in order.
// Without an explicit canvas the base apparel's size and a white fill are
// used.
struct MergeRecipe {
  MergeStep base;
  std::vector<MergeStep> steps;
  std::optional<Canvas> canvas;

  friend bool operator==(const MergeRecipe&, const MergeRecipe&) = default;
};

// Annotation plus decoded pixels, as the catalog hands them out.
struct ApparelAsset {
  AnnotatedApparel annotation;
  RgbImage image;
};

using CatalogResolver =
    std::function<std::shared_ptr<const ApparelAsset>(const std::string& apparel_id)>;

// Source image and masks placed on the canvas.
struct AlignedApparel {
  RgbImage image;
  MaskSet masks;
  int offset_x = 0;
  int offset_y = 0;
  int placed_width = 0;
  int placed_height = 0;
};

// Center-anchored placement. Sources larger than the canvas in either
// dimension are first scaled down uniformly to fit (bilinear pixels,
// nearest-neighbor masks). Uncovered canvas pixels take the fill color and
// are unset in every mask.
AlignedApparel align(const ApparelAsset& asset, const Canvas& canvas);

struct MergeLayer {
  MergeStep step;
  RgbImage image;
  BinaryMask mask;
};

struct MergePlan {
  MergeRecipe recipe;
  Canvas canvas;
  std::vector<MergeLayer> layers;  // base first
};

// Throws InvalidBase, UnknownApparel or MissingPart.
MergePlan plan_merge(const MergeRecipe& recipe, const CatalogResolver& catalog);

struct ProvenanceLabel {
  std::string apparel_id;
  SegmentClass part = SegmentClass::Background;

  friend bool operator==(const ProvenanceLabel&, const ProvenanceLabel&) = default;
};

// labels[y * width + x] indexes legend; 0 is always the background entry and
// layer k (base = 0) owns label k + 1.
struct ProvenanceMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> labels;
  std::vector<ProvenanceLabel> legend;

  std::uint16_t at(int x, int y) const noexcept {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  // Pixels whose label names `part` (or any non-background label for
  // silhouette).
  BinaryMask part_mask(SegmentClass part) const;

  friend bool operator==(const ProvenanceMap&, const ProvenanceMap&) = default;
};

struct MergeResult {
  RgbImage image;
  ProvenanceMap provenance;
  MergeRecipe recipe;
};

MergeResult execute_merge(const MergePlan& plan);

// Seeded enumeration of distinct recipes. For every base with a silhouette,
// each listed part is sourced from an apparel other than the base that has
// the part; when none has it the base itself is used if it can. Candidates
// are shuffled with SplitMix64(seed) and the first `limit` are returned.
std::vector<MergeRecipe> enumerate_variations(std::span<const std::string> apparel_ids,
                                              std::span<const SegmentClass> parts,
                                              std::size_t limit, std::uint64_t seed,
                                              const CatalogResolver& catalog,
                                              std::optional<Canvas> canvas = std::nullopt);

// --- recipe files --------------------------------------------------------------
//
//   # comment
//   [recipe]
//   base = A                (or A:silhouette)
//   canvas = 512x512        (optional)
//   fill = 255,255,255      (optional, needs canvas)
//   step = B:sleeve_right
//   step = B:sleeve_left
//
// Any number of [recipe] sections; the part follows the last ':'.
std::vector<MergeRecipe> parse_recipes(std::string_view text);
std::string write_recipes(std::span<const MergeRecipe> recipes);

}  // namespace cdapf
