#include "cdapf/store.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "cdapf/error.hpp"
#include "cdapf/png_io.hpp"
#include "cdapf/raster.hpp"
#include "json.hpp"

namespace cdapf {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kIndexFormat = "cdapf-store-v1";

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr))
    throw Error(ErrorCode::StorageIo, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 15];
  }
  return out;
}

std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream os;
  os << ".tmp." << ::getpid() << '.' << std::hash<std::thread::id>{}(std::this_thread::get_id())
     << '.' << counter.fetch_add(1);
  return os.str();
}

void write_atomically(const fs::path& target, const void* data, std::size_t size) {
  const fs::path tmp = target.string() + unique_suffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageIo, "cannot create " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw Error(ErrorCode::StorageIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::StorageIo, "cannot publish " + target.string());
  }
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::StorageIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// flock() on index.lock; serializes writers across processes.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::StorageIo, "cannot open " + path.string());
    while (::flock(fd_, LOCK_EX) != 0)
      if (errno != EINTR) {
        ::close(fd_);
        throw Error(ErrorCode::StorageIo, "cannot lock " + path.string());
      }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

json address_or_null(const std::optional<ContentAddress>& a) {
  return a ? json(a->hex()) : json(nullptr);
}

std::optional<ContentAddress> optional_address(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return ContentAddress(it->get<std::string>());
}

}  // namespace

// --- ContentAddress -------------------------------------------------------------

ContentAddress::ContentAddress(std::string hex) : hex_(std::move(hex)) {
  if (!is_valid(hex_)) throw Error(ErrorCode::InvalidArgument, "malformed content address '" + hex_ + "'");
}

ContentAddress ContentAddress::of(std::span<const std::uint8_t> bytes) {
  return ContentAddress(sha256_hex(bytes.data(), bytes.size()));
}

ContentAddress ContentAddress::of(std::string_view bytes) {
  return ContentAddress(sha256_hex(bytes.data(), bytes.size()));
}

bool ContentAddress::is_valid(std::string_view hex) noexcept {
  return hex.size() == 64 && std::all_of(hex.begin(), hex.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

// --- index serialization ------------------------------------------------------------

std::string index_to_json(const CatalogIndex& index) {
  json apparels = json::object();
  for (const auto& [id, e] : index.apparels)
    apparels[id] = {{"image", e.image.hex()},
                    {"annotation", e.annotation.hex()},
                    {"width", e.width},
                    {"height", e.height},
                    {"parts", e.parts}};
  json results = json::object();
  for (const auto& [id, r] : index.results)
    results[id] = {{"kind", r.kind},
                   {"image", r.image.hex()},
                   {"provenance", address_or_null(r.provenance)},
                   {"legend", address_or_null(r.legend)},
                   {"request", address_or_null(r.request)}};
  const json doc = {{"format", kIndexFormat},
                    {"apparels", apparels},
                    {"results", results},
                    {"sales_catalog", address_or_null(index.sales_catalog)}};
  return doc.dump(2) + "\n";
}

CatalogIndex index_from_json(std::string_view text) {
  CatalogIndex index;
  try {
    const json doc = json::parse(text.begin(), text.end());
    if (doc.value("format", "") != kIndexFormat)
      throw Error(ErrorCode::IntegrityError, "index.json has an unknown format");
    for (const auto& [id, e] : doc.at("apparels").items())
      index.apparels.emplace(id, ApparelEntry{ContentAddress(e.at("image").get<std::string>()),
                                              ContentAddress(e.at("annotation").get<std::string>()),
                                              e.at("width").get<int>(), e.at("height").get<int>(),
                                              e.at("parts").get<std::vector<std::string>>()});
    for (const auto& [id, r] : doc.at("results").items())
      index.results.emplace(id, ResultEntry{r.at("kind").get<std::string>(),
                                            ContentAddress(r.at("image").get<std::string>()),
                                            optional_address(r, "provenance"),
                                            optional_address(r, "legend"),
                                            optional_address(r, "request")});
    index.sales_catalog = optional_address(doc, "sales_catalog");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IntegrityError, std::string("index.json is corrupt: ") + e.what());
  }
  return index;
}

// --- Store ------------------------------------------------------------------------

Store::Store(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "blobs", ec);
  if (ec) throw Error(ErrorCode::StorageIo, "cannot create store at " + root_.string());
}

fs::path Store::blob_path(const ContentAddress& address) const {
  return root_ / "blobs" / address.hex().substr(0, 2) / address.hex();
}

ContentAddress Store::put(std::span<const std::uint8_t> bytes) {
  const auto address = ContentAddress::of(bytes);
  const auto path = blob_path(address);
  std::error_code ec;
  if (fs::exists(path, ec)) return address;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::StorageIo, "cannot create " + path.parent_path().string());
  write_atomically(path, bytes.data(), bytes.size());
  return address;
}

ContentAddress Store::put(std::string_view bytes) {
  return put(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> Store::get(const ContentAddress& address) const {
  if (address.empty()) throw Error(ErrorCode::NotFound, "empty content address");
  const auto path = blob_path(address);
  std::error_code ec;
  if (!fs::exists(path, ec))
    throw Error(ErrorCode::NotFound, "no blob " + address.hex(), {{"address", address.hex()}});
  auto bytes = read_file(path);
  if (ContentAddress::of(bytes) != address)
    throw Error(ErrorCode::IntegrityError, "blob " + address.hex() + " does not match its digest",
                {{"address", address.hex()}});
  return bytes;
}

std::string Store::get_string(const ContentAddress& address) const {
  const auto bytes = get(address);
  return {bytes.begin(), bytes.end()};
}

bool Store::contains(const ContentAddress& address) const {
  std::error_code ec;
  return !address.empty() && fs::exists(blob_path(address), ec);
}

std::shared_ptr<const CatalogIndex> Store::load_index_locked() const {
  const auto path = root_ / "index.json";
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    cached_ = std::make_shared<const CatalogIndex>();
    cached_stamp_ = {};
    cached_size_ = 0;
    return cached_;
  }
  const auto stamp = fs::last_write_time(path, ec);
  const auto size = fs::file_size(path, ec);
  if (cached_ && !ec && stamp == cached_stamp_ && size == cached_size_) return cached_;
  const auto bytes = read_file(path);
  cached_ = std::make_shared<const CatalogIndex>(
      index_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
  cached_stamp_ = stamp;
  cached_size_ = size;
  return cached_;
}

void Store::write_index_locked(const CatalogIndex& index) {
  const auto text = index_to_json(index);
  write_atomically(root_ / "index.json", text.data(), text.size());
  cached_ = std::make_shared<const CatalogIndex>(index);
  std::error_code ec;
  cached_stamp_ = fs::last_write_time(root_ / "index.json", ec);
  cached_size_ = text.size();
}

std::shared_ptr<const CatalogIndex> Store::snapshot() const {
  std::lock_guard lock(mutex_);
  return load_index_locked();
}

template <typename Fn>
void Store::mutate_index(Fn&& fn) {
  std::lock_guard lock(mutex_);
  FileLock file_lock(root_ / "index.lock");
  // Force a re-read: another process may have written within the same tick.
  cached_.reset();
  CatalogIndex next = *load_index_locked();
  if (fn(next)) write_index_locked(next);
}

std::string Store::register_apparel(std::span<const std::uint8_t> image_png, AnnotatedApparel record) {
  const RgbImage image = decode_png(image_png);
  if (record.width == 0 && record.height == 0) {
    record.width = image.width();
    record.height = image.height();
  }
  if (record.width != image.width() || record.height != image.height())
    throw Error(ErrorCode::ValidationFailed,
                record.apparel_id + ": annotation is " + std::to_string(record.width) + "x" +
                    std::to_string(record.height) + " but the image is " +
                    std::to_string(image.width()) + "x" + std::to_string(image.height()),
                {{"apparel_id", record.apparel_id}});
  if (const auto violations = validate_apparel(record); !violations.empty()) {
    json list = json::array();
    for (const auto& v : violations)
      list.push_back({{"region_index", v.region_index ? json(*v.region_index) : json(nullptr)},
                      {"rule", v.rule},
                      {"message", v.message}});
    throw Error(ErrorCode::ValidationFailed, record.apparel_id + ": " + violations.front().message,
                {{"apparel_id", record.apparel_id}, {"violations", list}});
  }

  const auto image_address = put(image_png);
  record.image_ref = image_address.hex();
  const auto annotation_address = put(write_via_project(std::span<const AnnotatedApparel>(&record, 1)));

  ApparelEntry entry{image_address, annotation_address, record.width, record.height, {}};
  const MaskSet masks = rasterize_apparel(record);
  for (const auto& [cls, mask] : masks.masks())
    if (cls != SegmentClass::Background && !mask.empty()) entry.parts.emplace_back(class_name(cls));

  mutate_index([&](CatalogIndex& index) {
    if (index.apparels.count(record.apparel_id))
      throw Error(ErrorCode::DuplicateId, "apparel '" + record.apparel_id + "' already exists",
                  {{"apparel_id", record.apparel_id}});
    index.apparels.emplace(record.apparel_id, entry);
    return true;
  });
  return record.apparel_id;
}

void Store::record_result(const std::string& result_id, const ResultEntry& entry) {
  mutate_index([&](CatalogIndex& index) { return index.results.emplace(result_id, entry).second; });
}

void Store::set_sales_catalog(const ContentAddress& address) {
  mutate_index([&](CatalogIndex& index) {
    if (index.sales_catalog == address) return false;
    index.sales_catalog = address;
    return true;
  });
}

}  // namespace cdapf
