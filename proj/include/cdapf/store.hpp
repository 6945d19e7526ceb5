#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdapf/annotation.hpp"

namespace cdapf {

// Lowercase hex SHA-256 of the stored bytes.
class ContentAddress {
 public:
  ContentAddress() = default;
  // Throws InvalidArgument unless `hex` is 64 lowercase hex digits.
  explicit ContentAddress(std::string hex);

  static ContentAddress of(std::span<const std::uint8_t> bytes);
  static ContentAddress of(std::string_view bytes);
  static bool is_valid(std::string_view hex) noexcept;

  const std::string& hex() const noexcept { return hex_; }
  bool empty() const noexcept { return hex_.empty(); }

  friend auto operator<=>(const ContentAddress&, const ContentAddress&) = default;

 private:
  std::string hex_;
};

struct ApparelEntry {
  ContentAddress image;
  ContentAddress annotation;  // single-image VIA project
  int width = 0;
  int height = 0;
  std::vector<std::string> parts;  // annotated class names, id order

  friend bool operator==(const ApparelEntry&, const ApparelEntry&) = default;
};

// A generated artifact. The id is the address of its image.
struct ResultEntry {
  std::string kind;  // "merge" | "stylize"
  ContentAddress image;
  std::optional<ContentAddress> provenance;  // 16-bit label PNG
  std::optional<ContentAddress> legend;      // JSON
  std::optional<ContentAddress> request;     // JSON describing the inputs

  friend bool operator==(const ResultEntry&, const ResultEntry&) = default;
};

struct CatalogIndex {
  std::map<std::string, ApparelEntry> apparels;
  std::map<std::string, ResultEntry> results;
  std::optional<ContentAddress> sales_catalog;

  friend bool operator==(const CatalogIndex&, const CatalogIndex&) = default;
};

// On-disk layout under the root:
//   blobs/<first 2 hex>/<64 hex>   raw bytes
//   index.json                     CatalogIndex, rewritten atomically
//   index.lock                     advisory lock serializing writers
//
// Blobs are written to a temp file and renamed, so concurrent puts of the
// same bytes are harmless. Snapshots are immutable; writers publish a new
// one.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  ContentAddress put(std::span<const std::uint8_t> bytes);
  ContentAddress put(std::string_view bytes);
  // Throws NotFound, IntegrityError (digest mismatch on read).
  std::vector<std::uint8_t> get(const ContentAddress& address) const;
  std::string get_string(const ContentAddress& address) const;
  bool contains(const ContentAddress& address) const;
  std::filesystem::path blob_path(const ContentAddress& address) const;

  // Validates the annotation against the decoded PNG dims, stores both and
  // publishes the new index entry. Throws ValidationFailed, DuplicateId,
  // InvalidImage.
  std::string register_apparel(std::span<const std::uint8_t> image_png,
                               AnnotatedApparel record);

  std::shared_ptr<const CatalogIndex> snapshot() const;
  std::shared_ptr<const CatalogIndex> list_apparels() const { return snapshot(); }

  // Idempotent; an existing id keeps its first entry.
  void record_result(const std::string& result_id, const ResultEntry& entry);
  void set_sales_catalog(const ContentAddress& address);

 private:
  template <typename Fn>
  void mutate_index(Fn&& fn);
  std::shared_ptr<const CatalogIndex> load_index_locked() const;
  void write_index_locked(const CatalogIndex& index);

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const CatalogIndex> cached_;
  mutable std::filesystem::file_time_type cached_stamp_{};
  mutable std::uintmax_t cached_size_ = 0;
};

std::string index_to_json(const CatalogIndex& index);
CatalogIndex index_from_json(std::string_view text);

}  // namespace cdapf
