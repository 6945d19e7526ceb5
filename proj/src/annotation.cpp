#include "cdapf/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cdapf/error.hpp"
#include "cdapf/rng.hpp"
#include "json.hpp"

namespace cdapf {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kViaFormatVersion = "2.0.10";

std::string stem_of(std::string_view filename) {
  const auto slash = filename.find_last_of("/\\");
  if (slash != std::string_view::npos) filename.remove_prefix(slash + 1);
  const auto dot = filename.find_last_of('.');
  if (dot != std::string_view::npos && dot > 0) filename = filename.substr(0, dot);
  return std::string(filename);
}

[[noreturn]] void malformed(const std::string& what, nlohmann::json details = nullptr) {
  throw Error(ErrorCode::MalformedProject, what, std::move(details));
}

std::vector<double> read_coords(const ordered_json& shape, const char* key,
                                const std::string& where) {
  const auto it = shape.find(key);
  if (it == shape.end() || !it->is_array()) malformed(where + ": missing " + key);
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) malformed(where + ": non-numeric coordinate in " + key);
    out.push_back(v.get<double>());
  }
  return out;
}

SegmentClass read_class(const ordered_json& region, const std::string& image,
                        std::size_t index) {
  const nlohmann::json details = {{"image", image}, {"region_index", index}};
  const auto attrs = region.find("region_attributes");
  if (attrs == region.end() || !attrs->is_object())
    throw Error(ErrorCode::UnknownClass, image + " region " + std::to_string(index) +
                                             ": missing region_attributes.class",
                details);
  const auto cls = attrs->find("class");
  if (cls == attrs->end())
    throw Error(ErrorCode::UnknownClass,
                image + " region " + std::to_string(index) + ": missing class attribute",
                details);
  std::optional<SegmentClass> parsed;
  std::string shown;
  if (cls->is_number_integer()) {
    parsed = class_from_id(cls->get<int>());
    shown = std::to_string(cls->get<long long>());
  } else if (cls->is_string()) {
    shown = cls->get<std::string>();
    parsed = parse_class(shown);
  } else {
    shown = cls->dump();
  }
  if (!parsed || *parsed == SegmentClass::Background)
    throw Error(ErrorCode::UnknownClass,
                image + " region " + std::to_string(index) + ": class '" + shown +
                    "' is not an annotatable part",
                details);
  return *parsed;
}

PolygonRegion read_region(const ordered_json& region, const std::string& image,
                          std::size_t index, Dims dims) {
  const std::string where = image + " region " + std::to_string(index);
  if (!region.is_object()) malformed(where + ": region is not an object");
  const auto shape = region.find("shape_attributes");
  if (shape == region.end() || !shape->is_object()) malformed(where + ": missing shape_attributes");
  const auto name = shape->find("name");
  if (name == shape->end() || !name->is_string()) malformed(where + ": missing shape name");
  if (name->get<std::string>() != "polygon")
    throw Error(ErrorCode::UnsupportedShape,
                where + ": shape '" + name->get<std::string>() + "' is not supported, only polygon",
                {{"image", image}, {"region_index", index}, {"shape", name->get<std::string>()}});

  PolygonRegion out;
  out.cls = read_class(region, image, index);
  const auto xs = read_coords(*shape, "all_points_x", where);
  const auto ys = read_coords(*shape, "all_points_y", where);
  if (xs.size() != ys.size()) malformed(where + ": all_points_x and all_points_y differ in length");
  if (xs.size() < 3)
    malformed(where + ": polygon needs at least 3 vertices",
              {{"image", image}, {"region_index", index}});
  out.vertices.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Point p{xs[i], ys[i]};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0 || p.y < 0 || p.x > dims.width ||
        p.y > dims.height)
      throw Error(ErrorCode::OutOfBoundsVertex,
                  where + ": vertex " + std::to_string(i) + " lies outside the " +
                      std::to_string(dims.width) + "x" + std::to_string(dims.height) + " image",
                  {{"image", image}, {"region_index", index}, {"vertex_index", i}});
    out.vertices.push_back(p);
  }
  return out;
}

AnnotatedApparel read_image_entry(const ordered_json& entry, const DimsLookup& dims) {
  if (!entry.is_object()) malformed("image entry is not an object");
  const auto fn = entry.find("filename");
  if (fn == entry.end() || !fn->is_string() || fn->get<std::string>().empty())
    malformed("image entry without filename");
  AnnotatedApparel out;
  out.apparel_id = stem_of(fn->get<std::string>());
  const auto d = dims.find(out.apparel_id);
  if (d == dims.end())
    throw Error(ErrorCode::MissingDimensions, "no image dimensions supplied for " + out.apparel_id,
                {{"apparel_id", out.apparel_id}});
  out.width = d->second.width;
  out.height = d->second.height;
  if (out.width < 1 || out.height < 1)
    throw Error(ErrorCode::MissingDimensions, "invalid dimensions for " + out.apparel_id);

  if (const auto fa = entry.find("file_attributes"); fa != entry.end() && fa->is_object()) {
    if (const auto ref = fa->find("image_ref"); ref != fa->end() && ref->is_string())
      out.image_ref = ref->get<std::string>();
  }

  const auto regions = entry.find("regions");
  if (regions == entry.end()) return out;
  std::size_t index = 0;
  if (regions->is_array()) {
    for (const auto& r : *regions) out.regions.push_back(read_region(r, out.apparel_id, index++, d->second));
  } else if (regions->is_object()) {
    // VIA 1.x keyed regions by their stringified index.
    for (const auto& [key, r] : regions->items())
      out.regions.push_back(read_region(r, out.apparel_id, index++, d->second));
  } else {
    malformed(out.apparel_id + ": regions must be an array");
  }
  return out;
}

ordered_json write_number(double v) {
  if (std::nearbyint(v) == v && std::abs(v) < 9.0e15) return static_cast<long long>(v);
  return v;
}

}  // namespace

std::vector<AnnotatedApparel> parse_via_project(std::string_view bytes, const DimsLookup& dims) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    malformed(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) malformed("project must be a JSON object");

  const ordered_json* metadata = &doc;
  if (const auto it = doc.find("_via_img_metadata"); it != doc.end()) {
    if (!it->is_object()) malformed("_via_img_metadata must be an object");
    metadata = &*it;
  }

  std::vector<std::string> order;
  if (const auto ids = doc.find("_via_image_id_list"); ids != doc.end() && ids->is_array()) {
    for (const auto& id : *ids) {
      if (!id.is_string() || !metadata->contains(id.get<std::string>()))
        malformed("_via_image_id_list references an unknown image");
      order.push_back(id.get<std::string>());
    }
  }
  if (order.empty())
    for (const auto& [key, value] : metadata->items()) {
      if (metadata == &doc && !key.empty() && key.front() == '_') continue;
      order.push_back(key);
    }

  std::vector<AnnotatedApparel> out;
  std::set<std::string> seen;
  out.reserve(order.size());
  for (const auto& key : order) {
    auto apparel = read_image_entry(metadata->at(key), dims);
    if (!seen.insert(apparel.apparel_id).second)
      malformed("duplicate image " + apparel.apparel_id, {{"apparel_id", apparel.apparel_id}});
    out.push_back(std::move(apparel));
  }
  return out;
}

std::string write_via_project(std::span<const AnnotatedApparel> apparels) {
  ordered_json metadata = ordered_json::object();
  ordered_json id_list = ordered_json::array();
  for (const auto& a : apparels) {
    if (const auto violations = validate_apparel(a); !violations.empty())
      throw Error(ErrorCode::ValidationFailed,
                  a.apparel_id + ": " + violations.front().message,
                  {{"apparel_id", a.apparel_id}, {"rule", violations.front().rule}});
    ordered_json regions = ordered_json::array();
    for (const auto& r : a.regions) {
      ordered_json xs = ordered_json::array();
      ordered_json ys = ordered_json::array();
      for (const auto& p : r.vertices) {
        xs.push_back(write_number(p.x));
        ys.push_back(write_number(p.y));
      }
      regions.push_back({{"shape_attributes",
                          {{"name", "polygon"}, {"all_points_x", xs}, {"all_points_y", ys}}},
                         {"region_attributes", {{"class", std::string(class_name(r.cls))}}}});
    }
    ordered_json file_attributes = {{"width", a.width}, {"height", a.height}};
    if (!a.image_ref.empty()) file_attributes["image_ref"] = a.image_ref;
    const std::string filename = a.apparel_id + ".png";
    const std::string key = filename + "-1";
    if (metadata.contains(key))
      throw Error(ErrorCode::ValidationFailed, "duplicate apparel id " + a.apparel_id);
    metadata[key] = {{"filename", filename},
                     {"size", -1},
                     {"regions", regions},
                     {"file_attributes", file_attributes}};
    id_list.push_back(key);
  }

  ordered_json options = ordered_json::object();
  for (const auto c : kAllSegmentClasses)
    if (c != SegmentClass::Background) options[std::string(class_name(c))] = "";

  ordered_json project = {
      {"_via_settings",
       {{"ui", {{"annotation_editor_height", 25}, {"annotation_editor_fontsize", 0.8},
                {"leftsidebar_width", 18},
                {"image_grid", {{"img_height", 80}, {"rshape_fill", "none"}, {"rshape_fill_opacity", 0.3},
                                {"rshape_stroke", "yellow"}, {"rshape_stroke_width", 2},
                                {"show_region_shape", true}, {"show_image_policy", "all"}}},
                {"image", {{"region_label", "class"}, {"region_color", "class"},
                           {"region_label_font", "10px Sans"}, {"on_image_annotation_editor_placement", "NEAR_REGION"}}}}},
        {"core", {{"buffer_size", 18}, {"filepath", ordered_json::object()}, {"default_filepath", ""}}},
        {"project", {{"name", "cdapf"}}}}},
      {"_via_img_metadata", metadata},
      {"_via_attributes",
       {{"region",
         {{"class", {{"type", "dropdown"}, {"description", "apparel part"},
                     {"options", options}, {"default_options", ordered_json::object()}}}}},
        {"file", ordered_json::object()}}},
      {"_via_data_format_version", kViaFormatVersion},
      {"_via_image_id_list", id_list}};
  return project.dump(1) + "\n";
}

std::vector<Violation> validate_apparel(const AnnotatedApparel& a) {
  std::vector<Violation> out;
  if (a.apparel_id.empty())
    out.push_back({std::nullopt, std::string(kRuleApparelId), "apparel id is empty"});
  if (a.width < 1 || a.height < 1)
    out.push_back({std::nullopt, std::string(kRuleDimensions),
                   "dimensions " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                       " must be at least 1x1"});
  for (std::size_t i = 0; i < a.regions.size(); ++i) {
    const auto& r = a.regions[i];
    const std::string where = "region " + std::to_string(i) + ": ";
    if (r.cls == SegmentClass::Background)
      out.push_back({i, std::string(kRuleBackgroundRegion), where + "background cannot be annotated"});
    if (r.vertices.size() < 3)
      out.push_back({i, std::string(kRuleVertexCount),
                     where + "vertex count " + std::to_string(r.vertices.size()) + " < 3"});
    bool non_finite = false;
    bool out_of_bounds = false;
    for (const auto& p : r.vertices) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        non_finite = true;
      else if (p.x < 0 || p.y < 0 || p.x > a.width || p.y > a.height)
        out_of_bounds = true;
    }
    if (non_finite) out.push_back({i, std::string(kRuleNonFinite), where + "vertex is not finite"});
    if (out_of_bounds)
      out.push_back({i, std::string(kRuleOutOfBounds), where + "vertex out of bounds"});
  }
  return out;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, SplitRatios ratios) {
  const double parts[3] = {ratios.train, ratios.validation, ratios.test};
  for (double r : parts)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw Error(ErrorCode::InvalidArgument, "split ratios must be finite and non-negative");
  if (std::abs(parts[0] + parts[1] + parts[2] - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "split ratios must sum to 1");

  // The 1e-9 slack keeps products like 0.57 * 100 from flooring to 56.
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * parts[i] + 1e-9));
    assigned += sizes[i];
  }
  for (int k = 2; assigned > n && k >= 0; --k) {
    const std::size_t take = std::min(sizes[k], assigned - n);
    sizes[k] -= take;
    assigned -= take;
  }
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[k % 3];
  return sizes;
}

DatasetSplit split_dataset(std::span<const std::string> ids, SplitRatios ratios,
                           std::uint64_t seed) {
  if (ids.empty()) throw Error(ErrorCode::EmptyInput, "cannot split an empty id list");
  std::vector<std::string> shuffled(ids.begin(), ids.end());
  {
    std::set<std::string_view> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size())
      throw Error(ErrorCode::InvalidArgument, "split ids must be unique");
  }
  SplitMix64 rng(seed);
  seeded_shuffle(std::span<std::string>(shuffled), rng);
  const auto sizes = split_sizes(shuffled.size(), ratios);

  DatasetSplit out;
  auto it = shuffled.begin();
  out.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
  it += static_cast<std::ptrdiff_t>(sizes[0]);
  out.validation.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
  it += static_cast<std::ptrdiff_t>(sizes[1]);
  out.test.assign(it, shuffled.end());
  return out;
}

}  // namespace cdapf
