#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include "cdapf/error.hpp"
#include "cdapf/insights.hpp"
#include "cdapf/merge.hpp"
#include "json.hpp"

namespace cdapf {

// JSON shapes shared by the HTTP API, the CLI and schema/api.schema.json.
// Readers are strict: unknown members raise Error(UnknownField).

void require_only(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                  std::string_view where);

nlohmann::json recipe_to_json(const MergeRecipe& recipe);
MergeRecipe recipe_from_json(const nlohmann::json& j);

nlohmann::json legend_to_json(const ProvenanceMap& provenance);
std::vector<ProvenanceLabel> legend_from_json(const nlohmann::json& j);

nlohmann::json ranking_to_json(const AttributeRanking& ranking);

nlohmann::json error_to_json(ErrorCode code, std::string_view message,
                             const nlohmann::json& details = nullptr);

}  // namespace cdapf
