#include "cdapf/insights.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "cdapf/error.hpp"

namespace cdapf {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// RFC 4180 fields on a single line; returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(trim(cur));
  return fields;
}

}  // namespace

CatalogIngest ingest_catalog(std::string_view csv) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < csv.size();) {
    const auto nl = csv.find('\n', pos);
    lines.push_back(csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!lines.empty() && lines.front().starts_with("\xEF\xBB\xBF")) lines.front().remove_prefix(3);

  std::size_t header_index = 0;
  while (header_index < lines.size() && trim(lines[header_index]).empty()) ++header_index;
  if (header_index == lines.size()) throw Error(ErrorCode::MissingHeader, "catalog has no header row");
  const auto header = split_csv_line(lines[header_index]);
  bool has_season = false;
  bool header_ok = header && header->size() >= 3 && header->size() <= 4 &&
                   lower((*header)[0]) == "apparel_id" && lower((*header)[1]) == "attributes" &&
                   lower((*header)[2]) == "units_sold";
  if (header_ok && header->size() == 4) {
    has_season = lower((*header)[3]) == "season";
    header_ok = has_season;
  }
  if (!header_ok)
    throw Error(ErrorCode::MissingHeader,
                "first row must be apparel_id,attributes,units_sold[,season]",
                {{"line", header_index + 1}});

  CatalogIngest out;
  for (std::size_t i = header_index + 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    auto reject = [&](std::string reason) { out.rejected.push_back({line_no, std::move(reason)}); };
    const auto fields = split_csv_line(lines[i]);
    if (!fields) {
      reject("unterminated quote");
      continue;
    }
    const std::size_t expected = has_season ? 4 : 3;
    if (fields->size() != expected && !(has_season && fields->size() == 3)) {
      reject("expected " + std::to_string(expected) + " fields, got " + std::to_string(fields->size()));
      continue;
    }
    CatalogRecord rec;
    rec.apparel_id = (*fields)[0];
    if (rec.apparel_id.empty()) {
      reject("apparel_id is empty");
      continue;
    }
    std::string_view attrs = (*fields)[1];
    while (!attrs.empty()) {
      const auto semi = attrs.find(';');
      const std::string tag = lower(trim(attrs.substr(0, semi)));
      if (!tag.empty()) rec.attributes.insert(tag);
      if (semi == std::string_view::npos) break;
      attrs.remove_prefix(semi + 1);
    }
    if (rec.attributes.empty()) {
      reject("attributes are empty");
      continue;
    }
    const std::string& units = (*fields)[2];
    const auto [ptr, ec] = std::from_chars(units.data(), units.data() + units.size(), rec.units_sold);
    if (units.empty() || ec != std::errc{} || ptr != units.data() + units.size()) {
      reject("units_sold '" + units + "' is not a non-negative integer");
      continue;
    }
    if (has_season && fields->size() == 4 && !(*fields)[3].empty()) rec.season = lower((*fields)[3]);
    out.records.push_back(std::move(rec));
  }
  return out;
}

AttributeRanking rank_attributes(std::span<const CatalogRecord> records,
                                 const std::optional<std::string>& season) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> acc;
  AttributeRanking out;
  const std::optional<std::string> want = season ? std::optional(lower(*season)) : std::nullopt;
  for (const auto& r : records) {
    if (want && r.season != want) continue;
    out.total_units += r.units_sold;
    for (const auto& a : r.attributes) {
      acc[a].first += r.units_sold;
      acc[a].second += 1;
    }
  }
  for (const auto& [attr, v] : acc) {
    AttributeRow row{attr, v.first, v.second, 0.0};
    if (out.total_units > 0)
      row.share = static_cast<double>(v.first) / static_cast<double>(out.total_units);
    out.rows.push_back(std::move(row));
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const AttributeRow& a, const AttributeRow& b) {
    return a.total_units > b.total_units;
  });
  return out;
}

std::string ranking_to_csv(const AttributeRanking& ranking) {
  std::ostringstream os;
  os << "attribute,total_units,record_count,share\n";
  for (const auto& row : ranking.rows) {
    char share[32];
    std::snprintf(share, sizeof share, "%.6f", row.share);
    os << row.attribute << ',' << row.total_units << ',' << row.record_count << ',' << share << '\n';
  }
  return os.str();
}

}  // namespace cdapf
