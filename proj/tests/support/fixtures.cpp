#include "fixtures.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>

#include "cdapf/png_io.hpp"

namespace fixtures {
namespace fs = std::filesystem;

bool pnpoly(const std::vector<Point>& ring, double px, double py) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[j];
    const Point& b = ring[i];
    if ((a.y <= py) != (b.y <= py)) {
      const double x = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x <= px) inside = !inside;
    }
  }
  return inside;
}

BinaryMask oracle_rasterize(const std::vector<Point>& ring, int width, int height) {
  BinaryMask m(width, height);
  if (ring.size() < 3) return m;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (pnpoly(ring, x + 0.5, y + 0.5)) m.set(x, y);
  return m;
}

Counts oracle_iou_counts(const BinaryMask& a, const BinaryMask& b) {
  Counts c;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const bool p = a.test(x, y), q = b.test(x, y);
      c.intersection += (p && q) ? 1 : 0;
      c.union_ += (p || q) ? 1 : 0;
    }
  return c;
}

NaiveStats naive_stats(const std::vector<double>& v, const BinaryMask* mask, int width) {
  NaiveStats s;
  const std::size_t pixels = v.size() / 3;
  auto selected = [&](std::size_t i) {
    return !mask || mask->test(static_cast<int>(i % width), static_cast<int>(i / width));
  };
  for (std::size_t i = 0; i < pixels; ++i) {
    if (!selected(i)) continue;
    ++s.n;
    for (int c = 0; c < 3; ++c) s.mean[c] += v[i * 3 + c];
  }
  for (auto& m : s.mean) m /= static_cast<double>(s.n);
  for (std::size_t i = 0; i < pixels; ++i) {
    if (!selected(i)) continue;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) s.cov[r][c] += (v[i * 3 + r] - s.mean[r]) * (v[i * 3 + c] - s.mean[c]);
  }
  for (auto& row : s.cov)
    for (auto& x : row) x /= static_cast<double>(s.n);
  return s;
}

BinaryMask random_mask(Rng& rng, int width, int height, double density) {
  std::bernoulli_distribution bit(density);
  BinaryMask m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (bit(rng)) m.set(x, y);
  return m;
}

BinaryMask random_blob_mask(Rng& rng, int width, int height) {
  BinaryMask m(width, height);
  std::uniform_real_distribution<double> ux(0, width), uy(0, height);
  std::uniform_real_distribution<double> ur(1.0, std::max(2.0, std::min(width, height) / 3.0));
  const int blobs = std::uniform_int_distribution<int>(0, 5)(rng);
  for (int b = 0; b < blobs; ++b) {
    const double cx = ux(rng), cy = uy(rng), r = ur(rng);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y);
  }
  return m;
}

std::vector<Point> random_polygon(Rng& rng, int width, int height, int vertices) {
  // Mix of star-shaped rings and arbitrary (often self-intersecting) ones,
  // sometimes snapped to the half-pixel grid to hit ties.
  std::vector<Point> ring;
  std::uniform_real_distribution<double> ux(0, width), uy(0, height), u01(0, 1);
  const int style = std::uniform_int_distribution<int>(0, 2)(rng);
  if (style == 0) {
    const double cx = ux(rng), cy = uy(rng);
    std::vector<double> angles(vertices);
    for (auto& a : angles) a = u01(rng) * 2 * std::numbers::pi;
    std::sort(angles.begin(), angles.end());
    const double rmax = std::max(width, height) * 0.6;
    for (double a : angles) {
      const double r = rmax * (0.2 + 0.8 * u01(rng));
      ring.push_back({std::clamp(cx + r * std::cos(a), 0.0, double(width)),
                      std::clamp(cy + r * std::sin(a), 0.0, double(height))});
    }
  } else {
    for (int i = 0; i < vertices; ++i) ring.push_back({ux(rng), uy(rng)});
  }
  if (style == 2)
    for (auto& p : ring) {
      p.x = std::round(p.x * 2) / 2;
      p.y = std::round(p.y * 2) / 2;
    }
  return ring;
}

RgbImage random_image(Rng& rng, int width, int height, int lo, int hi) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> noise(0, 6);
  double base[3], gx[3], gy[3], amp[3], fx[3], fy[3];
  const double mid = (lo + hi) / 2.0, span = (hi - lo) / 2.0;
  for (int c = 0; c < 3; ++c) {
    base[c] = mid + span * 0.5 * u(rng);
    gx[c] = span * 0.4 * u(rng) / std::max(1, width);
    gy[c] = span * 0.4 * u(rng) / std::max(1, height);
    amp[c] = span * 0.3 * u(rng);
    fx[c] = 0.05 + 0.2 * std::abs(u(rng));
    fy[c] = 0.05 + 0.2 * std::abs(u(rng));
  }
  RgbImage img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      std::uint8_t ch[3];
      for (int c = 0; c < 3; ++c) {
        const double v = base[c] + gx[c] * (x - width / 2.0) + gy[c] * (y - height / 2.0) +
                         amp[c] * std::sin(fx[c] * x + fy[c] * y) + noise(rng);
        ch[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), long(lo), long(hi)));
      }
      img.set(x, y, {ch[0], ch[1], ch[2]});
    }
  return img;
}

AnnotatedApparel make_garment(const std::string& id, int w, int h, std::uint64_t seed,
                              GarmentOptions options) {
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + 17);
  std::uniform_real_distribution<double> j(-1, 1);
  auto jit = [&](double scale) { return scale * j(rng); };
  const double W = w, H = h;
  const double cx = W / 2 + jit(0.03 * W);
  const double top = H * (0.08 + jit(0.02));
  const double nw = W * (0.08 + jit(0.015));
  const double sy = H * (0.18 + jit(0.02));
  const double sw = W * (0.17 + jit(0.02));
  const double sl = W * (0.13 + jit(0.03)) * options.sleeve_scale;
  const double sd = H * (0.2 + jit(0.03));
  const double ww = W * (0.13 + jit(0.02));
  const double wy = H * (0.45 + jit(0.03));
  const double hw = W * (0.3 + jit(0.04));
  const double hy = H * (0.9 + jit(0.03));

  auto P = [&](double x, double y) {
    return Point{std::round(std::clamp(x, 0.0, W) * 10) / 10, std::round(std::clamp(y, 0.0, H) * 10) / 10};
  };
  AnnotatedApparel a;
  a.apparel_id = id;
  a.width = w;
  a.height = h;
  auto add = [&](SegmentClass cls, std::vector<Point> v) { a.regions.push_back({cls, std::move(v)}); };

  // Image-left is the wearer's right.
  const Point r_out = P(cx - sw - sl, sy + sd), r_cuff = P(cx - sw - sl + 0.09 * W, sy + sd + 0.05 * H);
  const Point l_out = P(cx + sw + sl, sy + sd), l_cuff = P(cx + sw + sl - 0.09 * W, sy + sd + 0.05 * H);
  add(SegmentClass::Silhouette,
      {P(cx - nw, top), P(cx - sw, sy), r_out, r_cuff, P(cx - ww, wy), P(cx - hw, hy), P(cx + hw, hy),
       P(cx + ww, wy), l_cuff, l_out, P(cx + sw, sy), P(cx + nw, top)});

  std::bernoulli_distribution keep(0.7);
  auto want = [&] { return options.all_parts || keep(rng); };
  if (want())
    add(SegmentClass::SleeveRight, {P(cx - sw, sy), r_out, r_cuff, P(cx - sw + 0.04 * W, sy + 0.12 * H)});
  if (want())
    add(SegmentClass::SleeveLeft, {P(cx + sw, sy), P(cx + sw - 0.04 * W, sy + 0.12 * H), l_cuff, l_out});
  if (want())
    add(SegmentClass::Collar, {P(cx - nw, top), P(cx + nw, top), P(cx + 0.6 * nw, top + 0.05 * H),
                               P(cx, top + 0.035 * H), P(cx - 0.6 * nw, top + 0.05 * H)});
  if (want())
    add(SegmentClass::Neck, {P(cx - 0.5 * nw, top + 0.055 * H), P(cx + 0.5 * nw, top + 0.055 * H),
                             P(cx, top + 0.13 * H)});
  if (want()) {
    const double py = H * (0.3 + jit(0.03)), pr = W * (0.06 + jit(0.015));
    std::vector<Point> star;
    for (int k = 0; k < 10; ++k) {
      const double ang = k * std::numbers::pi / 5 - std::numbers::pi / 2;
      const double r = (k % 2 == 0) ? pr : pr * 0.45;
      star.push_back(P(cx + r * std::cos(ang), py + r * std::sin(ang)));
    }
    add(SegmentClass::Print, std::move(star));
  }
  if (want())
    add(SegmentClass::Hemline, {P(cx - hw * 0.97, hy - 0.05 * H), P(cx + hw * 0.97, hy - 0.05 * H),
                                P(cx + hw, hy), P(cx - hw, hy)});
  if (want())
    add(SegmentClass::ShoulderRight, {P(cx - nw, top), P(cx - sw, sy), P(cx - sw + 0.03 * W, sy + 0.04 * H),
                                      P(cx - nw * 0.9, top + 0.04 * H)});
  if (want())
    add(SegmentClass::ShoulderLeft, {P(cx + nw, top), P(cx + nw * 0.9, top + 0.04 * H),
                                     P(cx + sw - 0.03 * W, sy + 0.04 * H), P(cx + sw, sy)});
  return a;
}

RgbImage paint_garment(const AnnotatedApparel& apparel, std::uint64_t seed) {
  Rng rng(seed ^ 0xC0FFEEULL);
  std::uniform_int_distribution<int> hue(0, 255);
  std::normal_distribution<double> noise(0, 5);
  const int w = apparel.width, h = apparel.height;
  RgbImage img(w, h);
  auto clamp8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double g = 240 + noise(rng) * 0.5;
      img.set(x, y, {clamp8(g), clamp8(g - 2), clamp8(g - 4)});
    }
  // Painted in region order; a later region's color wins.
  for (const auto& region : apparel.regions) {
    const double r = hue(rng), g = hue(rng), b = hue(rng);
    const BinaryMask m = oracle_rasterize(region.vertices, w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (m.test(x, y))
          img.set(x, y, {clamp8(r + noise(rng)), clamp8(g + noise(rng)), clamp8(b + noise(rng))});
  }
  return img;
}

std::shared_ptr<const cdapf::ApparelAsset> make_asset(const std::string& id, int width, int height,
                                                      std::uint64_t seed, GarmentOptions options) {
  auto asset = std::make_shared<cdapf::ApparelAsset>();
  asset->annotation = make_garment(id, width, height, seed, options);
  asset->image = paint_garment(asset->annotation, seed);
  return asset;
}

cdapf::CatalogResolver resolver_for(const AssetMap& assets) {
  return [assets](const std::string& id) -> std::shared_ptr<const cdapf::ApparelAsset> {
    const auto it = assets.find(id);
    return it == assets.end() ? nullptr : it->second;
  };
}

AssetMap sleeve_swap_assets() {
  AssetMap m;
  m["swap_a"] = make_asset("swap_a", 96, 128, 4001);
  m["swap_b"] = make_asset("swap_b", 96, 128, 4002, {true, 1.6});
  return m;
}

cdapf::MergeRecipe sleeve_swap_recipe() {
  cdapf::MergeRecipe r;
  r.base = {"swap_a", SegmentClass::Silhouette};
  r.steps = {{"swap_b", SegmentClass::SleeveRight}, {"swap_b", SegmentClass::SleeveLeft}};
  return r;
}

void write_dataset(const fs::path& dir, const AssetMap& assets) {
  fs::create_directories(dir / "images");
  std::vector<AnnotatedApparel> records;
  for (const auto& [id, asset] : assets) {
    write_file(dir / "images" / (id + ".png"), cdapf::encode_png(asset->image));
    records.push_back(asset->annotation);
  }
  write_file(dir / "project.json", cdapf::write_via_project(records));
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

CliRun run_cli(const std::vector<std::string>& args) {
  TempDir io("cli-io");
  std::string cmd = shell_quote(CDAPF_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >" + shell_quote((io.path() / "out").string()) + " 2>" + shell_quote((io.path() / "err").string());
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(io.path() / "out");
  r.err = slurp(io.path() / "err");
  return r;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace fixtures
