#include "cdapf/workspace.hpp"

#include <algorithm>
#include <fstream>

#include "cdapf/api_json.hpp"
#include "cdapf/error.hpp"
#include "cdapf/png_io.hpp"
#include "json.hpp"

namespace cdapf {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string(), {{"path", path.string()}});
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string as_string(const std::vector<std::uint8_t>& bytes) { return {bytes.begin(), bytes.end()}; }

}  // namespace

Workspace::Workspace(fs::path data_dir) : store_(std::move(data_dir)) {}

std::string Workspace::register_apparel(std::span<const std::uint8_t> image_png, AnnotatedApparel record) {
  return store_.register_apparel(image_png, std::move(record));
}

std::vector<std::string> Workspace::ingest_directory(const fs::path& images_dir,
                                                     const fs::path& annotation_file) {
  const std::string project = as_string(read_file(annotation_file));

  // Dimensions come from the images themselves, keyed by file stem.
  DimsLookup dims;
  std::map<std::string, std::vector<std::uint8_t>> images;
  std::error_code ec;
  if (!fs::is_directory(images_dir, ec))
    throw Error(ErrorCode::NotFound, "not a directory: " + images_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    auto bytes = read_file(path);
    const RgbImage image = decode_png(bytes);
    const std::string id = path.stem().string();
    dims[id] = {image.width(), image.height()};
    images.emplace(id, std::move(bytes));
  }

  std::vector<std::string> ids;
  for (auto& apparel : parse_via_project(project, dims)) {
    const auto& bytes = images.at(apparel.apparel_id);
    ids.push_back(register_apparel(bytes, std::move(apparel)));
  }
  return ids;
}

std::shared_ptr<const ApparelAsset> Workspace::load_apparel(const std::string& apparel_id) const {
  const auto snapshot = store_.snapshot();
  const auto it = snapshot->apparels.find(apparel_id);
  if (it == snapshot->apparels.end())
    throw Error(ErrorCode::UnknownApparel, "unknown apparel '" + apparel_id + "'",
                {{"apparel_id", apparel_id}});
  const std::string key = it->second.image.hex() + it->second.annotation.hex();
  {
    std::lock_guard lock(cache_mutex_);
    if (const auto c = cache_.find(key); c != cache_.end()) return c->second;
  }
  auto asset = std::make_shared<ApparelAsset>();
  asset->image = decode_png(store_.get(it->second.image));
  const DimsLookup dims{{apparel_id, Dims{asset->image.width(), asset->image.height()}}};
  auto parsed = parse_via_project(store_.get_string(it->second.annotation), dims);
  if (parsed.size() != 1 || parsed.front().apparel_id != apparel_id)
    throw Error(ErrorCode::IntegrityError, "stored annotation for '" + apparel_id + "' is inconsistent");
  asset->annotation = std::move(parsed.front());
  std::lock_guard lock(cache_mutex_);
  return cache_.emplace(key, std::move(asset)).first->second;
}

CatalogResolver Workspace::resolver() const {
  return [this](const std::string& id) -> std::shared_ptr<const ApparelAsset> {
    try {
      return load_apparel(id);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnknownApparel) return nullptr;
      throw;
    }
  };
}

std::vector<std::uint8_t> Workspace::mask_png(const std::string& apparel_id, SegmentClass cls) const {
  const auto asset = load_apparel(apparel_id);
  const MaskSet masks = rasterize_apparel(asset->annotation);
  const BinaryMask* mask = masks.find(cls);
  if (!mask || (cls != SegmentClass::Background && mask->empty()))
    throw Error(ErrorCode::MissingPart,
                "apparel '" + apparel_id + "' has no " + std::string(class_name(cls)),
                {{"apparel_id", apparel_id}, {"part", class_name(cls)}});
  return encode_mask_png(*mask);
}

MergeArtifacts Workspace::merge(const MergeRecipe& recipe) {
  MergeArtifacts out;
  out.result = execute_merge(plan_merge(recipe, resolver()));
  out.image_png = encode_png(out.result.image);
  out.provenance_png = encode_gray16_png(out.result.provenance.width, out.result.provenance.height,
                                         out.result.provenance.labels);
  out.legend_json = legend_to_json(out.result.provenance).dump(2) + "\n";

  ResultEntry entry;
  entry.kind = "merge";
  entry.image = store_.put(out.image_png);
  entry.provenance = store_.put(out.provenance_png);
  entry.legend = store_.put(out.legend_json);
  entry.request = store_.put(recipe_to_json(recipe).dump(2) + "\n");
  out.result_id = entry.image.hex();
  store_.record_result(out.result_id, entry);
  return out;
}

std::optional<ResultEntry> Workspace::find_result(const std::string& result_id) const {
  if (!ContentAddress::is_valid(result_id)) return std::nullopt;
  const auto snapshot = store_.snapshot();
  const auto it = snapshot->results.find(result_id);
  if (it == snapshot->results.end()) return std::nullopt;
  return it->second;
}

StylizeContent Workspace::stylize_content(const std::string& content_id, SegmentClass part) const {
  if (part == SegmentClass::Background)
    throw Error(ErrorCode::ValidationFailed, "target part cannot be background");
  if (const auto result = find_result(content_id)) {
    StylizeContent out;
    out.image = decode_png(store_.get(result->image));
    if (result->provenance && result->legend) {
      ProvenanceMap prov;
      prov.labels = decode_gray16_png(store_.get(*result->provenance), prov.width, prov.height);
      prov.legend = legend_from_json(json::parse(store_.get_string(*result->legend)));
      if (prov.width != out.image.width() || prov.height != out.image.height())
        throw Error(ErrorCode::IntegrityError, "provenance size differs from result " + content_id);
      out.mask = prov.part_mask(part);
    } else if (result->request) {
      // A stylized apparel: reuse the mask of whatever it was made from.
      const json request = json::parse(store_.get_string(*result->request));
      out.mask = stylize_content(request.at("content").get<std::string>(), part).mask;
    } else {
      throw Error(ErrorCode::IntegrityError, "result " + content_id + " carries no mask source");
    }
    return out;
  }
  const auto asset = load_apparel(content_id);
  const MaskSet masks = rasterize_apparel(asset->annotation);
  return {asset->image, masks.get_or_empty(part)};
}

StylizeArtifacts Workspace::stylize(const StylizeRequest& request) {
  const StylizeContent content = stylize_content(request.content_id, request.part);
  const RgbImage style = decode_png(request.style_png);

  StyleSpec spec;
  spec.method = request.method;
  spec.epsilon = request.epsilon;
  spec.target_part = request.part;
  std::optional<ContentAddress> mask_address;
  if (request.style_mask_png) {
    spec.style_mask = decode_mask_png(*request.style_mask_png);
    mask_address = store_.put(*request.style_mask_png);
  }
  const ContentAddress style_address = store_.put(request.style_png);
  spec.style_image_ref = style_address.hex();

  const StylizeResult result = cdapf::stylize(content.image, content.mask, style, spec, request.content_id);

  StylizeArtifacts out;
  out.image_png = encode_png(result.image);
  out.style_ref = style_address.hex();

  ResultEntry entry;
  entry.kind = "stylize";
  entry.image = store_.put(out.image_png);
  if (const auto source = find_result(request.content_id)) {
    entry.provenance = source->provenance;
    entry.legend = source->legend;
  }
  const json req = {{"content", request.content_id},
                    {"style", style_address.hex()},
                    {"style_mask", mask_address ? json(mask_address->hex()) : json(nullptr)},
                    {"method", method_name(request.method)},
                    {"epsilon", request.epsilon},
                    {"part", class_name(request.part)}};
  entry.request = store_.put(req.dump(2) + "\n");
  out.result_id = entry.image.hex();
  store_.record_result(out.result_id, entry);
  return out;
}

std::vector<VariationArtifact> Workspace::variations(const std::vector<std::string>& apparel_ids,
                                                     const std::vector<SegmentClass>& parts,
                                                     std::size_t limit, std::uint64_t seed,
                                                     std::optional<Canvas> canvas) {
  const auto recipes = enumerate_variations(apparel_ids, parts, limit, seed, resolver(), canvas);
  std::vector<VariationArtifact> out;
  out.reserve(recipes.size());
  for (const auto& r : recipes) out.push_back({r, merge(r).result_id});
  return out;
}

CatalogIngest Workspace::ingest_sales_catalog(std::string_view csv) {
  CatalogIngest ingest = ingest_catalog(csv);
  store_.set_sales_catalog(store_.put(csv));
  return ingest;
}

AttributeRanking Workspace::insights(const std::optional<std::string>& season) const {
  const auto snapshot = store_.snapshot();
  if (!snapshot->sales_catalog) return {};
  const auto ingest = ingest_catalog(store_.get_string(*snapshot->sales_catalog));
  return rank_attributes(ingest.records, season);
}

RgbImage make_thumbnail(const RgbImage& image, int max_side) {
  if (image.width() <= max_side && image.height() <= max_side) return image;
  const double s = std::min(static_cast<double>(max_side) / image.width(),
                            static_cast<double>(max_side) / image.height());
  const int w = std::clamp(static_cast<int>(std::lround(image.width() * s)), 1, max_side);
  const int h = std::clamp(static_cast<int>(std::lround(image.height() * s)), 1, max_side);
  return resize_bilinear(image, w, h);
}

}  // namespace cdapf
