#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdapf {

struct CatalogRecord {
  std::string apparel_id;
  std::set<std::string> attributes;  // lowercase tags such as "color:red"
  std::uint64_t units_sold = 0;
  std::optional<std::string> season;

  friend bool operator==(const CatalogRecord&, const CatalogRecord&) = default;
};

struct RowRejection {
  std::size_t line = 0;  // 1-based line number in the file
  std::string reason;
};

struct CatalogIngest {
  std::vector<CatalogRecord> records;
  std::vector<RowRejection> rejected;
};

// Header `apparel_id,attributes,units_sold[,season]`, attributes separated by
// ';'. Bad rows are reported, not dropped silently. Throws MissingHeader.
CatalogIngest ingest_catalog(std::string_view csv);

struct AttributeRow {
  std::string attribute;
  std::uint64_t total_units = 0;
  std::uint64_t record_count = 0;
  double share = 0.0;  // total_units / all units, 0 when nothing sold

  friend bool operator==(const AttributeRow&, const AttributeRow&) = default;
};

struct AttributeRanking {
  std::vector<AttributeRow> rows;
  std::uint64_t total_units = 0;

  friend bool operator==(const AttributeRanking&, const AttributeRanking&) = default;
};

// Sorted by total_units descending, then attribute ascending.
AttributeRanking rank_attributes(std::span<const CatalogRecord> records,
                                 const std::optional<std::string>& season = std::nullopt);

std::string ranking_to_csv(const AttributeRanking& ranking);

}  // namespace cdapf
