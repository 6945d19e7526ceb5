#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cdapf/insights.hpp"
#include "cdapf/merge.hpp"
#include "cdapf/store.hpp"
#include "cdapf/transfer.hpp"

namespace cdapf {

struct MergeArtifacts {
  std::string result_id;  // content address of image_png
  std::vector<std::uint8_t> image_png;
  std::vector<std::uint8_t> provenance_png;  // 16-bit labels
  std::string legend_json;
  MergeResult result;
};

struct StylizeRequest {
  std::string content_id;  // apparel id or result id
  std::vector<std::uint8_t> style_png;
  std::optional<std::vector<std::uint8_t>> style_mask_png;
  TransferMethod method = TransferMethod::MeanStd;
  double epsilon = kDefaultEpsilon;
  SegmentClass part = SegmentClass::Silhouette;
};

struct StylizeArtifacts {
  std::string result_id;
  std::vector<std::uint8_t> image_png;
  std::string style_ref;
};

struct VariationArtifact {
  MergeRecipe recipe;
  std::string result_id;
};

// Content image plus the mask a stylize call would restrict itself to.
struct StylizeContent {
  RgbImage image;
  BinaryMask mask;
};

// The pipeline over a data directory. CLI subcommands and HTTP handlers are
// thin wrappers around these calls, so equal requests yield equal bytes.
// Safe for concurrent use.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path data_dir);

  Store& store() noexcept { return store_; }
  const Store& store() const noexcept { return store_; }

  std::string register_apparel(std::span<const std::uint8_t> image_png, AnnotatedApparel record);
  // Registers every image of a VIA project; images are read from
  // `images_dir/<filename>`.
  std::vector<std::string> ingest_directory(const std::filesystem::path& images_dir,
                                            const std::filesystem::path& annotation_file);

  // Throws UnknownApparel.
  std::shared_ptr<const ApparelAsset> load_apparel(const std::string& apparel_id) const;
  CatalogResolver resolver() const;

  // Rendered 0/255 mask; throws UnknownApparel, MissingPart.
  std::vector<std::uint8_t> mask_png(const std::string& apparel_id, SegmentClass cls) const;

  MergeArtifacts merge(const MergeRecipe& recipe);
  StylizeArtifacts stylize(const StylizeRequest& request);
  std::vector<VariationArtifact> variations(const std::vector<std::string>& apparel_ids,
                                            const std::vector<SegmentClass>& parts,
                                            std::size_t limit, std::uint64_t seed,
                                            std::optional<Canvas> canvas = std::nullopt);

  StylizeContent stylize_content(const std::string& content_id, SegmentClass part) const;
  std::optional<ResultEntry> find_result(const std::string& result_id) const;

  CatalogIngest ingest_sales_catalog(std::string_view csv);
  AttributeRanking insights(const std::optional<std::string>& season) const;

 private:
  Store store_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const ApparelAsset>> cache_;  // by annotation+image
};

// Downscaled copy that fits in max_side x max_side (never upscales).
RgbImage make_thumbnail(const RgbImage& image, int max_side = 128);

}  // namespace cdapf
