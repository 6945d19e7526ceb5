#pragma once

// Procedural garments and brute-force oracles shared by the unit tests and
// the acceptance binary. Nothing here calls into the library's raster or
// statistics code, so results can be compared against it.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cdapf/annotation.hpp"
#include "cdapf/image.hpp"
#include "cdapf/merge.hpp"
#include "cdapf/raster.hpp"

namespace fixtures {

using cdapf::AnnotatedApparel;
using cdapf::BinaryMask;
using cdapf::Dims;
using cdapf::Point;
using cdapf::PolygonRegion;
using cdapf::RgbImage;
using cdapf::SegmentClass;

using Rng = std::mt19937_64;

// --- oracles -------------------------------------------------------------

// Classic crossing test at (px, py), same crossing expression as a scanline
// filler, counting crossings left of or on the sample.
bool pnpoly(const std::vector<Point>& ring, double px, double py);
BinaryMask oracle_rasterize(const std::vector<Point>& ring, int width, int height);

struct Counts {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
};
Counts oracle_iou_counts(const BinaryMask& a, const BinaryMask& b);

// Mean and population covariance by straightforward accumulation.
struct NaiveStats {
  double mean[3] = {0, 0, 0};
  double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  std::uint64_t n = 0;
};
NaiveStats naive_stats(const std::vector<double>& interleaved, const BinaryMask* mask, int width);

// --- generators ------------------------------------------------------------

BinaryMask random_mask(Rng& rng, int width, int height, double density);
// Random blobs rather than salt-and-pepper noise.
BinaryMask random_blob_mask(Rng& rng, int width, int height);
std::vector<Point> random_polygon(Rng& rng, int width, int height, int vertices);
// Smooth color field with noise, channels kept inside [lo, hi].
RgbImage random_image(Rng& rng, int width, int height, int lo = 0, int hi = 255);

struct GarmentOptions {
  bool all_parts = true;  // otherwise each optional part is dropped at random
  double sleeve_scale = 1.0;
};

// A dress-like outline with sleeves, collar, neck, print, hemline and
// shoulders, jittered by the seed.
AnnotatedApparel make_garment(const std::string& id, int width, int height, std::uint64_t seed,
                              GarmentOptions options = {});
// Distinct, noisy colors per class over an off-white background.
RgbImage paint_garment(const AnnotatedApparel& apparel, std::uint64_t seed);

std::shared_ptr<const cdapf::ApparelAsset> make_asset(const std::string& id, int width, int height,
                                                      std::uint64_t seed, GarmentOptions options = {});

using AssetMap = std::map<std::string, std::shared_ptr<const cdapf::ApparelAsset>>;
cdapf::CatalogResolver resolver_for(const AssetMap& assets);

// The two garments of the sleeve-swap walkthrough: A gives the silhouette,
// B gives both sleeves. B's sleeves are wider than A's.
AssetMap sleeve_swap_assets();
cdapf::MergeRecipe sleeve_swap_recipe();

// Writes <dir>/images/<id>.png and <dir>/project.json for the given assets.
void write_dataset(const std::filesystem::path& dir, const AssetMap& assets);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

// Runs the cdapf executable with stdout and stderr captured.
struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};
CliRun run_cli(const std::vector<std::string>& args);

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "cdapf");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
