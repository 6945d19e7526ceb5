#include "cdapf/api_json.hpp"

#include <algorithm>

namespace cdapf {
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& message) {
  throw Error(ErrorCode::ValidationFailed, message);
}

const json& member(const json& object, const char* key, std::string_view where) {
  const auto it = object.find(key);
  if (it == object.end()) bad(std::string(where) + ": missing '" + key + "'");
  return *it;
}

MergeStep step_from_json(const json& j, std::string_view where, bool part_optional) {
  if (!j.is_object()) bad(std::string(where) + " must be an object");
  require_only(j, {"apparel_id", "part"}, where);
  const json& id = member(j, "apparel_id", where);
  if (!id.is_string() || id.get<std::string>().empty())
    bad(std::string(where) + ".apparel_id must be a non-empty string");
  MergeStep step{id.get<std::string>(), SegmentClass::Silhouette};
  const auto part = j.find("part");
  if (part == j.end()) {
    if (!part_optional) bad(std::string(where) + ": missing 'part'");
    return step;
  }
  if (!part->is_string()) bad(std::string(where) + ".part must be a string");
  const auto cls = class_from_name(part->get<std::string>());
  if (!cls)
    throw Error(ErrorCode::UnknownClass, std::string(where) + ".part '" + part->get<std::string>() + "' is unknown");
  step.part = *cls;
  return step;
}

json step_to_json(const MergeStep& s) {
  return {{"apparel_id", s.apparel_id}, {"part", class_name(s.part)}};
}

}  // namespace

void require_only(const json& object, std::initializer_list<std::string_view> allowed,
                  std::string_view where) {
  if (!object.is_object()) return;
  for (const auto& [key, value] : object.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorCode::UnknownField, std::string(where) + ": unknown field '" + key + "'",
                  {{"field", key}});
}

json recipe_to_json(const MergeRecipe& r) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(step_to_json(s));
  json out = {{"base", step_to_json(r.base)}, {"steps", steps}};
  if (r.canvas)
    out["canvas"] = {{"width", r.canvas->width},
                     {"height", r.canvas->height},
                     {"fill", {r.canvas->fill.r, r.canvas->fill.g, r.canvas->fill.b}}};
  return out;
}

MergeRecipe recipe_from_json(const json& j) {
  if (!j.is_object()) bad("recipe must be a JSON object");
  require_only(j, {"base", "steps", "canvas"}, "recipe");
  MergeRecipe r;
  r.base = step_from_json(member(j, "base", "recipe"), "recipe.base", true);
  if (const auto steps = j.find("steps"); steps != j.end()) {
    if (!steps->is_array()) bad("recipe.steps must be an array");
    for (std::size_t i = 0; i < steps->size(); ++i)
      r.steps.push_back(step_from_json((*steps)[i], "recipe.steps[" + std::to_string(i) + "]", false));
  }
  if (const auto c = j.find("canvas"); c != j.end() && !c->is_null()) {
    if (!c->is_object()) bad("recipe.canvas must be an object");
    require_only(*c, {"width", "height", "fill"}, "recipe.canvas");
    const json& w = member(*c, "width", "recipe.canvas");
    const json& h = member(*c, "height", "recipe.canvas");
    if (!w.is_number_integer() || !h.is_number_integer() || w.get<long long>() < 1 ||
        h.get<long long>() < 1 || w.get<long long>() > 16384 || h.get<long long>() > 16384)
      bad("recipe.canvas width and height must be integers in [1, 16384]");
    Canvas canvas{w.get<int>(), h.get<int>(), kWhite};
    if (const auto fill = c->find("fill"); fill != c->end()) {
      if (!fill->is_array() || fill->size() != 3) bad("recipe.canvas.fill must be [r, g, b]");
      std::uint8_t ch[3];
      for (int i = 0; i < 3; ++i) {
        const json& v = (*fill)[static_cast<std::size_t>(i)];
        if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 255)
          bad("recipe.canvas.fill channels must be integers in [0, 255]");
        ch[i] = static_cast<std::uint8_t>(v.get<int>());
      }
      canvas.fill = {ch[0], ch[1], ch[2]};
    }
    r.canvas = canvas;
  }
  return r;
}

json legend_to_json(const ProvenanceMap& provenance) {
  json labels = json::array();
  for (std::size_t i = 0; i < provenance.legend.size(); ++i) {
    const auto& l = provenance.legend[i];
    labels.push_back({{"label", i},
                      {"apparel_id", i == 0 ? json(nullptr) : json(l.apparel_id)},
                      {"part", class_name(l.part)}});
  }
  return {{"width", provenance.width}, {"height", provenance.height}, {"labels", labels}};
}

std::vector<ProvenanceLabel> legend_from_json(const json& j) {
  std::vector<ProvenanceLabel> out;
  for (const auto& l : j.at("labels")) {
    const auto cls = class_from_name(l.at("part").get<std::string>());
    if (!cls) throw Error(ErrorCode::IntegrityError, "legend names an unknown class");
    out.push_back({l.at("apparel_id").is_null() ? std::string() : l.at("apparel_id").get<std::string>(), *cls});
  }
  return out;
}

json ranking_to_json(const AttributeRanking& ranking) {
  json rows = json::array();
  for (const auto& r : ranking.rows)
    rows.push_back({{"attribute", r.attribute},
                    {"total_units", r.total_units},
                    {"record_count", r.record_count},
                    {"share", r.share}});
  return {{"total_units", ranking.total_units}, {"rows", rows}};
}

json error_to_json(ErrorCode code, std::string_view message, const json& details) {
  json e = {{"code", to_string(code)}, {"message", message}};
  if (!details.is_null()) e["details"] = details;
  return {{"error", e}};
}

}  // namespace cdapf
