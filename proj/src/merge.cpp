#include "cdapf/merge.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cdapf/error.hpp"
#include "cdapf/rng.hpp"

namespace cdapf {
namespace {

// Pastes `src` into `dst` with its top-left corner at (ox, oy).
void paste(RgbImage& dst, const RgbImage& src, int ox, int oy) {
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) dst.set(ox + x, oy + y, src.at(x, y));
}

BinaryMask place(const BinaryMask& src, int width, int height, int ox, int oy) {
  BinaryMask out(width, height);
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      if (src.test(x, y)) out.set(ox + x, oy + y);
  return out;
}

void require_part(SegmentClass part, const std::string& where) {
  if (part == SegmentClass::Background)
    throw Error(ErrorCode::ValidationFailed, where + ": background is not a selectable part");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

MergeStep parse_step(std::string_view text, std::size_t line, bool allow_bare) {
  const auto colon = text.rfind(':');
  MergeStep step;
  if (colon == std::string_view::npos) {
    if (!allow_bare)
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(line) + ": expected apparel_id:part",
                  {{"line", line}});
    step.apparel_id = trim(text);
    step.part = SegmentClass::Silhouette;
  } else {
    step.apparel_id = trim(text.substr(0, colon));
    const std::string part = trim(text.substr(colon + 1));
    const auto cls = parse_class(part);
    if (!cls)
      throw Error(ErrorCode::UnknownClass,
                  "line " + std::to_string(line) + ": unknown part '" + part + "'",
                  {{"line", line}});
    step.part = *cls;
  }
  if (step.apparel_id.empty())
    throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line) + ": empty apparel id",
                {{"line", line}});
  return step;
}

int parse_int(std::string_view s, std::size_t line) {
  int v = 0;
  const auto t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw Error(ErrorCode::InvalidArgument,
                "line " + std::to_string(line) + ": '" + t + "' is not an integer", {{"line", line}});
  return v;
}

}  // namespace

// --- alignment -----------------------------------------------------------------

AlignedApparel align(const ApparelAsset& asset, const Canvas& canvas) {
  const int w = asset.image.width();
  const int h = asset.image.height();
  if (canvas.width < 1 || canvas.height < 1)
    throw Error(ErrorCode::InvalidArgument, "canvas must be at least 1x1");
  if (w != asset.annotation.width || h != asset.annotation.height)
    throw Error(ErrorCode::DimensionMismatch,
                asset.annotation.apparel_id + ": image size differs from its annotation");

  int pw = w;
  int ph = h;
  if (w > canvas.width || h > canvas.height) {
    const double s = std::min(static_cast<double>(canvas.width) / w,
                              static_cast<double>(canvas.height) / h);
    pw = std::clamp(static_cast<int>(std::lround(w * s)), 1, canvas.width);
    ph = std::clamp(static_cast<int>(std::lround(h * s)), 1, canvas.height);
  }
  AlignedApparel out;
  out.placed_width = pw;
  out.placed_height = ph;
  out.offset_x = (canvas.width - pw) / 2;
  out.offset_y = (canvas.height - ph) / 2;

  out.image = RgbImage(canvas.width, canvas.height, canvas.fill);
  paste(out.image, resize_bilinear(asset.image, pw, ph), out.offset_x, out.offset_y);

  const MaskSet source = rasterize_apparel(asset.annotation);
  out.masks = MaskSet(canvas.width, canvas.height);
  for (const auto& [cls, m] : source.masks()) {
    if (cls == SegmentClass::Background) continue;
    out.masks.set(cls, place(resize_nearest(m, pw, ph), canvas.width, canvas.height,
                             out.offset_x, out.offset_y));
  }
  out.masks.recompute_background();
  return out;
}

// --- planning and execution --------------------------------------------------------

MergePlan plan_merge(const MergeRecipe& recipe, const CatalogResolver& catalog) {
  if (recipe.base.part != SegmentClass::Silhouette)
    throw Error(ErrorCode::InvalidBase,
                "base part must be silhouette, got " + std::string(class_name(recipe.base.part)),
                {{"part", class_name(recipe.base.part)}});

  std::vector<MergeStep> all;
  all.reserve(recipe.steps.size() + 1);
  all.push_back(recipe.base);
  all.insert(all.end(), recipe.steps.begin(), recipe.steps.end());
  if (all.size() >= std::numeric_limits<std::uint16_t>::max())
    throw Error(ErrorCode::InvalidArgument, "too many merge steps");

  std::map<std::string, std::shared_ptr<const ApparelAsset>> assets;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& step = all[i];
    require_part(step.part, "step " + std::to_string(i));
    if (!assets.count(step.apparel_id)) {
      auto asset = catalog ? catalog(step.apparel_id) : nullptr;
      if (!asset)
        throw Error(ErrorCode::UnknownApparel, "unknown apparel '" + step.apparel_id + "'",
                    {{"apparel_id", step.apparel_id}});
      assets.emplace(step.apparel_id, std::move(asset));
    }
  }

  MergePlan plan;
  plan.recipe = recipe;
  const auto& base_asset = *assets.at(recipe.base.apparel_id);
  plan.canvas = recipe.canvas.value_or(
      Canvas{base_asset.annotation.width, base_asset.annotation.height, kWhite});

  std::map<std::string, MaskSet> source_masks;
  for (const auto& step : all) {
    auto it = source_masks.find(step.apparel_id);
    if (it == source_masks.end())
      it = source_masks.emplace(step.apparel_id, rasterize_apparel(assets.at(step.apparel_id)->annotation)).first;
    const BinaryMask* m = it->second.find(step.part);
    if (!m || m->empty())
      throw Error(ErrorCode::MissingPart,
                  "apparel '" + step.apparel_id + "' has no " + std::string(class_name(step.part)),
                  {{"apparel_id", step.apparel_id}, {"part", class_name(step.part)}});
  }

  std::map<std::string, AlignedApparel> aligned;
  for (const auto& [id, asset] : assets) aligned.emplace(id, align(*asset, plan.canvas));
  for (const auto& step : all) {
    const auto& a = aligned.at(step.apparel_id);
    plan.layers.push_back({step, a.image, a.masks.get_or_empty(step.part)});
  }
  return plan;
}

MergeResult execute_merge(const MergePlan& plan) {
  if (plan.layers.empty()) throw Error(ErrorCode::InvalidArgument, "merge plan has no layers");
  const Canvas& canvas = plan.canvas;
  MergeResult result;
  result.recipe = plan.recipe;
  auto& prov = result.provenance;
  prov.width = canvas.width;
  prov.height = canvas.height;
  prov.labels.assign(static_cast<std::size_t>(canvas.width) * static_cast<std::size_t>(canvas.height), 0);
  prov.legend.push_back({"", SegmentClass::Background});

  const auto& base = plan.layers.front();
  result.image = extract(base.image, base.mask, canvas);
  for (std::size_t k = 0; k < plan.layers.size(); ++k) {
    const auto& layer = plan.layers[k];
    if (k > 0) result.image = composite_over(result.image, layer.image, layer.mask);
    const auto label = static_cast<std::uint16_t>(k + 1);
    prov.legend.push_back({layer.step.apparel_id, layer.step.part});
    for (int y = 0; y < canvas.height; ++y)
      for (int x = 0; x < canvas.width; ++x)
        if (layer.mask.test(x, y))
          prov.labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(canvas.width) +
                      static_cast<std::size_t>(x)] = label;
  }
  return result;
}

BinaryMask ProvenanceMap::part_mask(SegmentClass part) const {
  BinaryMask out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto label = at(x, y);
      if (label == 0 || label >= legend.size()) continue;
      if (part == SegmentClass::Silhouette || legend[label].part == part) out.set(x, y);
    }
  return out;
}

// --- variations -------------------------------------------------------------------

std::vector<MergeRecipe> enumerate_variations(std::span<const std::string> apparel_ids,
                                              std::span<const SegmentClass> parts,
                                              std::size_t limit, std::uint64_t seed,
                                              const CatalogResolver& catalog,
                                              std::optional<Canvas> canvas) {
  std::vector<std::string> ids;
  for (const auto& id : apparel_ids)
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  std::vector<SegmentClass> wanted;
  for (const auto p : parts) {
    require_part(p, "variation part");
    if (std::find(wanted.begin(), wanted.end(), p) == wanted.end()) wanted.push_back(p);
  }
  if (ids.size() < 2 || wanted.empty())
    throw Error(ErrorCode::InsufficientInputs,
                "variations need at least 2 distinct apparels and 1 part",
                {{"apparels", ids.size()}, {"parts", wanted.size()}});
  if (limit == 0) return {};

  // Which parts each apparel really has (non-empty raster).
  std::vector<std::set<SegmentClass>> has(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto asset = catalog ? catalog(ids[i]) : nullptr;
    if (!asset)
      throw Error(ErrorCode::UnknownApparel, "unknown apparel '" + ids[i] + "'",
                  {{"apparel_id", ids[i]}});
    const MaskSet masks = rasterize_apparel(asset->annotation);
    for (const auto& [cls, m] : masks.masks())
      if (cls != SegmentClass::Background && !m.empty()) has[i].insert(cls);
  }

  struct BaseChoices {
    std::size_t base;
    std::vector<std::vector<std::size_t>> sources;  // per wanted part
    std::uint64_t count;
  };
  constexpr std::uint64_t kCountCap = std::uint64_t{1} << 62;
  std::vector<BaseChoices> bases;
  std::uint64_t total = 0;
  for (std::size_t b = 0; b < ids.size(); ++b) {
    if (!has[b].count(SegmentClass::Silhouette)) continue;
    BaseChoices choice{b, {}, 1};
    for (const auto part : wanted) {
      std::vector<std::size_t> src;
      for (std::size_t a = 0; a < ids.size(); ++a)
        if (a != b && has[a].count(part)) src.push_back(a);
      if (src.empty() && has[b].count(part)) src.push_back(b);
      if (src.empty()) {
        choice.count = 0;
        break;
      }
      choice.count = choice.count > kCountCap / src.size() ? kCountCap : choice.count * src.size();
      choice.sources.push_back(std::move(src));
    }
    if (choice.count == 0) continue;
    total = std::min(kCountCap, total + choice.count);
    bases.push_back(std::move(choice));
  }

  auto decode = [&](std::uint64_t index) {
    std::size_t k = 0;
    while (index >= bases[k].count) index -= bases[k++].count;
    const auto& bc = bases[k];
    MergeRecipe r;
    r.base = {ids[bc.base], SegmentClass::Silhouette};
    r.canvas = canvas;
    // Mixed radix with the last part varying fastest.
    std::vector<std::size_t> digits(wanted.size());
    for (std::size_t p = wanted.size(); p-- > 0;) {
      const auto radix = bc.sources[p].size();
      digits[p] = static_cast<std::size_t>(index % radix);
      index /= radix;
    }
    for (std::size_t p = 0; p < wanted.size(); ++p)
      r.steps.push_back({ids[bc.sources[p][digits[p]]], wanted[p]});
    return r;
  };

  SplitMix64 rng(seed);
  std::vector<std::uint64_t> picks;
  constexpr std::uint64_t kMaterializeLimit = std::uint64_t{1} << 20;
  if (total <= kMaterializeLimit) {
    picks.resize(static_cast<std::size_t>(total));
    for (std::uint64_t i = 0; i < total; ++i) picks[static_cast<std::size_t>(i)] = i;
    seeded_shuffle(std::span<std::uint64_t>(picks), rng);
    if (picks.size() > limit) picks.resize(limit);
  } else {
    std::unordered_set<std::uint64_t> seen;
    const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(limit, total));
    while (picks.size() < want) {
      const auto i = rng.below(total);
      if (seen.insert(i).second) picks.push_back(i);
    }
  }

  std::vector<MergeRecipe> out;
  out.reserve(picks.size());
  for (const auto i : picks) out.push_back(decode(i));
  return out;
}

// --- recipe files ------------------------------------------------------------------

std::vector<MergeRecipe> parse_recipes(std::string_view text) {
  std::vector<MergeRecipe> out;
  bool in_recipe = false;
  bool have_base = false;
  std::optional<Rgb> fill;
  std::size_t section_line = 0;

  auto finish = [&]() {
    if (!in_recipe) return;
    if (!have_base)
      throw Error(ErrorCode::InvalidArgument,
                  "recipe starting at line " + std::to_string(section_line) + " has no base",
                  {{"line", section_line}});
    if (fill) {
      if (!out.back().canvas)
        throw Error(ErrorCode::InvalidArgument,
                    "recipe starting at line " + std::to_string(section_line) +
                        ": fill requires canvas",
                    {{"line", section_line}});
      out.back().canvas->fill = *fill;
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[recipe]") {
      finish();
      out.emplace_back();
      in_recipe = true;
      have_base = false;
      fill.reset();
      section_line = line_no;
      continue;
    }
    if (!in_recipe)
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(line_no) + ": expected [recipe]", {{"line", line_no}});
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(line_no) + ": expected key = value", {{"line", line_no}});
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    auto& r = out.back();
    if (key == "base") {
      if (have_base)
        throw Error(ErrorCode::InvalidArgument,
                    "line " + std::to_string(line_no) + ": duplicate base", {{"line", line_no}});
      r.base = parse_step(value, line_no, true);
      have_base = true;
    } else if (key == "step") {
      r.steps.push_back(parse_step(value, line_no, false));
    } else if (key == "canvas") {
      const auto x = value.find('x');
      if (x == std::string::npos)
        throw Error(ErrorCode::InvalidArgument,
                    "line " + std::to_string(line_no) + ": canvas must be WIDTHxHEIGHT", {{"line", line_no}});
      Canvas c;
      c.width = parse_int(std::string_view(value).substr(0, x), line_no);
      c.height = parse_int(std::string_view(value).substr(x + 1), line_no);
      if (c.width < 1 || c.height < 1)
        throw Error(ErrorCode::InvalidArgument,
                    "line " + std::to_string(line_no) + ": canvas must be at least 1x1", {{"line", line_no}});
      r.canvas = c;
    } else if (key == "fill") {
      int ch[3];
      std::string_view rest = value;
      for (int i = 0; i < 3; ++i) {
        const auto comma = rest.find(',');
        if ((i < 2) == (comma == std::string_view::npos))
          throw Error(ErrorCode::InvalidArgument,
                      "line " + std::to_string(line_no) + ": fill must be R,G,B", {{"line", line_no}});
        ch[i] = parse_int(rest.substr(0, comma), line_no);
        if (ch[i] < 0 || ch[i] > 255)
          throw Error(ErrorCode::InvalidArgument,
                      "line " + std::to_string(line_no) + ": fill channel out of range", {{"line", line_no}});
        if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
      }
      fill = Rgb{static_cast<std::uint8_t>(ch[0]), static_cast<std::uint8_t>(ch[1]),
                 static_cast<std::uint8_t>(ch[2])};
    } else {
      throw Error(ErrorCode::UnknownField,
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'", {{"line", line_no}});
    }
  }
  finish();
  return out;
}

std::string write_recipes(std::span<const MergeRecipe> recipes) {
  std::ostringstream os;
  for (std::size_t i = 0; i < recipes.size(); ++i) {
    const auto& r = recipes[i];
    if (i) os << '\n';
    os << "[recipe]\n";
    os << "base = " << r.base.apparel_id << ':' << class_name(r.base.part) << '\n';
    if (r.canvas) {
      os << "canvas = " << r.canvas->width << 'x' << r.canvas->height << '\n';
      os << "fill = " << int(r.canvas->fill.r) << ',' << int(r.canvas->fill.g) << ','
         << int(r.canvas->fill.b) << '\n';
    }
    for (const auto& s : r.steps) os << "step = " << s.apparel_id << ':' << class_name(s.part) << '\n';
  }
  return os.str();
}

}  // namespace cdapf
