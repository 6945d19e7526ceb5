// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "cdapf/api_json.hpp"
#include "cdapf/error.hpp"
#include "cdapf/metrics.hpp"
#include "cdapf/png_io.hpp"
#include "cdapf/transfer.hpp"
#include "cdapf/workspace.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support/fixtures.hpp"

using namespace cdapf;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and sizes.
constexpr int kIouPairs = 1000;
constexpr double kIouSeconds = 5.0;
constexpr int kRasterPolygons = 200;
constexpr int kMergeRecipes = 100;
constexpr int kStatPairs = 50;
constexpr double kMeanTol = 0.5 / 255.0;
constexpr double kStdRelTol = 0.01;
constexpr double kCovFrobRelTol = 0.02;
constexpr double kWctEpsilon = 1e-5;
constexpr int kIdentityTol = 1;  // per channel, 8-bit units
constexpr double kStylizeSeconds = 1.0;
constexpr double kMergeSeconds = 0.100;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

BinaryMask oracle_part_mask(const AnnotatedApparel& a, SegmentClass cls) {
  BinaryMask m(a.width, a.height);
  for (const auto& r : a.regions)
    if (r.cls == cls) m = mask_union(m, fixtures::oracle_rasterize(r.vertices, a.width, a.height));
  return m;
}

std::vector<double> rgb_values(const RgbImage& img) {
  std::vector<double> v;
  v.reserve(img.pixel_count() * 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Rgb p = img.at(x, y);
      v.insert(v.end(), {p.r / 255.0, p.g / 255.0, p.b / 255.0});
    }
  return v;
}

// Reinhard l-alpha-beta, written out independently of the library.
std::vector<double> lab_values(const RgbImage& img) {
  std::vector<double> v;
  v.reserve(img.pixel_count() * 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Rgb p = img.at(x, y);
      const double r = p.r / 255.0, g = p.g / 255.0, b = p.b / 255.0;
      const double l = std::log10(0.3811 * r + 0.5783 * g + 0.0402 * b + 1.0 / 255);
      const double m = std::log10(0.1967 * r + 0.7244 * g + 0.0782 * b + 1.0 / 255);
      const double s = std::log10(0.0241 * r + 0.1288 * g + 0.8444 * b + 1.0 / 255);
      v.insert(v.end(), {(l + m + s) / std::sqrt(3.0), (l + m - 2 * s) / std::sqrt(6.0), (l - m) / std::sqrt(2.0)});
    }
  return v;
}

// --- criteria ------------------------------------------------------------------

Outcome iou_oracle() {
  fixtures::Rng rng(101);
  std::vector<std::pair<BinaryMask, BinaryMask>> pairs;
  for (int i = 0; i < kIouPairs; ++i) {
    const double d = std::uniform_real_distribution<double>(0.02, 0.98)(rng);
    pairs.emplace_back(fixtures::random_mask(rng, 64, 64, d), fixtures::random_mask(rng, 64, 64, d));
  }
  int mismatches = 0;
  const auto t0 = Clock::now();
  for (const auto& [a, b] : pairs) {
    const auto want = fixtures::oracle_iou_counts(a, b);
    const IoU got = iou(a, b);
    if (got.intersection != want.intersection || got.union_ != want.union_ ||
        got.score != double(want.intersection) / double(want.union_))
      ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kIouSeconds,
          fmt("%d pairs, %d mismatches, %.3f s (limit %.1f s)", kIouPairs, mismatches, secs, kIouSeconds)};
}

Outcome raster_oracle() {
  fixtures::Rng rng(202);
  int bad = 0;
  long pixels = 0;
  for (int i = 0; i < kRasterPolygons; ++i) {
    const int w = std::uniform_int_distribution<int>(1, 256)(rng);
    const int h = std::uniform_int_distribution<int>(1, 256)(rng);
    const int n = std::uniform_int_distribution<int>(3, 12)(rng);
    const PolygonRegion r{SegmentClass::Print, fixtures::random_polygon(rng, w, h, n)};
    if (rasterize_polygon(r, {w, h}) != fixtures::oracle_rasterize(r.vertices, w, h)) ++bad;
    pixels += long(w) * h;
  }
  // rectangle [10,40) x [5,25) on 64x32
  const PolygonRegion rect{SegmentClass::Print, {{10, 5}, {40, 5}, {40, 25}, {10, 25}}};
  const auto area = rasterize_polygon(rect, {64, 32}).area();
  return {bad == 0 && area == 30 * 20,
          fmt("%d polygons (%ld pixels), %d differ; rectangle 30x20 -> %llu pixels", kRasterPolygons, pixels, bad,
              static_cast<unsigned long long>(area))};
}

Outcome merge_provenance() {
  constexpr SegmentClass parts[] = {SegmentClass::Collar, SegmentClass::Neck, SegmentClass::Print,
                                    SegmentClass::Hemline, SegmentClass::SleeveRight, SegmentClass::SleeveLeft,
                                    SegmentClass::ShoulderRight, SegmentClass::ShoulderLeft};
  fixtures::Rng rng(303);
  // mixed sizes; the oracle reads the aligned sources
  fixtures::AssetMap cat;
  const int sizes[][2] = {{64, 80}, {64, 80}, {48, 96}, {96, 64}, {40, 50}, {128, 160}};
  for (int i = 0; i < 6; ++i) {
    const std::string id = "m" + std::to_string(i);
    cat[id] = fixtures::make_asset(id, sizes[i][0], sizes[i][1], 700 + i, {i % 2 == 0});
  }
  std::vector<std::string> ids;
  for (const auto& [id, a] : cat) ids.push_back(id);
  const auto resolve = fixtures::resolver_for(cat);

  int bad_pixels = 0, bad_recipes = 0;
  long checked = 0;
  for (int t = 0; t < kMergeRecipes; ++t) {
    MergeRecipe r;
    r.base = {ids[rng() % ids.size()], SegmentClass::Silhouette};
    const int steps = std::uniform_int_distribution<int>(1, 5)(rng);
    for (int s = 0; s < steps; ++s) {
      const std::string id = ids[rng() % ids.size()];
      std::vector<SegmentClass> avail;
      for (auto p : parts)
        if (!oracle_part_mask(cat.at(id)->annotation, p).empty()) avail.push_back(p);
      if (!avail.empty()) r.steps.push_back({id, avail[rng() % avail.size()]});
    }
    if (t % 4 == 1) r.canvas = Canvas{72, 90, {20, 40, 60}};
    if (t % 4 == 3) r.canvas = Canvas{50, 50, {0, 0, 0}};
    const MergePlan plan = plan_merge(r, resolve);
    const MergeResult res = execute_merge(plan);
    const Canvas& canvas = plan.canvas;
    std::map<std::string, AlignedApparel> aligned;
    for (const auto& id : ids) aligned.emplace(id, align(*cat.at(id), canvas));
    int bad_here = 0;
    for (int y = 0; y < canvas.height; ++y)
      for (int x = 0; x < canvas.width; ++x) {
        const auto l = res.provenance.at(x, y);
        const Rgb want = l == 0 ? canvas.fill : aligned.at(res.provenance.legend.at(l).apparel_id).image.at(x, y);
        if (res.image.at(x, y) != want) ++bad_here;
        ++checked;
      }
    bad_pixels += bad_here;
    bad_recipes += bad_here != 0;
  }
  return {bad_pixels == 0,
          fmt("%d recipes, %ld pixels checked, %d wrong pixels in %d recipes", kMergeRecipes, checked, bad_pixels,
              bad_recipes)};
}

Outcome sleeve_swap() {
  const auto cat = fixtures::sleeve_swap_assets();
  const auto& a = *cat.at("swap_a");
  const auto& b = *cat.at("swap_b");
  const MergeResult res = execute_merge(plan_merge(fixtures::sleeve_swap_recipe(), fixtures::resolver_for(cat)));
  const BinaryMask sleeves = mask_union(oracle_part_mask(b.annotation, SegmentClass::SleeveRight),
                                        oracle_part_mask(b.annotation, SegmentClass::SleeveLeft));
  const BinaryMask rest = mask_subtract(oracle_part_mask(a.annotation, SegmentClass::Silhouette), sleeves);
  int sleeve_bad = 0, rest_bad = 0;
  for (int y = 0; y < a.image.height(); ++y)
    for (int x = 0; x < a.image.width(); ++x) {
      if (sleeves.test(x, y) && res.image.at(x, y) != b.image.at(x, y)) ++sleeve_bad;
      if (rest.test(x, y) && res.image.at(x, y) != a.image.at(x, y)) ++rest_bad;
    }
  // B's sleeves are wider, so some sleeve pixels fall outside A's outline.
  const auto outside = mask_subtract(sleeves, oracle_part_mask(a.annotation, SegmentClass::Silhouette)).area();
  return {sleeve_bad == 0 && rest_bad == 0 && sleeves.area() > 0 && rest.area() > 0,
          fmt("sleeve pixels %llu (%llu beyond A's outline) differ from B: %d; other silhouette pixels %llu differ "
              "from A: %d",
              static_cast<unsigned long long>(sleeves.area()), static_cast<unsigned long long>(outside), sleeve_bad,
              static_cast<unsigned long long>(rest.area()), rest_bad)};
}

Outcome style_identity() {
  int worst = 0, cases = 0, leaked = 0, isolation_cases = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = fixtures::make_garment("g", 64, 80, seed);
    const RgbImage content = fixtures::paint_garment(g, seed);
    for (auto part : {SegmentClass::Silhouette, SegmentClass::Print}) {
      const BinaryMask target = oracle_part_mask(g, part);
      if (target.empty()) continue;
      for (auto method : {TransferMethod::MeanStd, TransferMethod::Wct}) {
        StyleSpec spec;
        spec.method = method;
        spec.style_mask = target;
        const RgbImage out = stylize_image(content, target, content, spec);
        for (int y = 0; y < 80; ++y)
          for (int x = 0; x < 64; ++x) {
            const Rgb p = out.at(x, y), q = content.at(x, y);
            worst = std::max({worst, std::abs(p.r - q.r), std::abs(p.g - q.g), std::abs(p.b - q.b)});
          }
        ++cases;
      }
    }
  }
  fixtures::Rng rng(404);
  for (int t = 0; t < 50; ++t) {
    const RgbImage content = fixtures::random_image(rng, 60, 50);
    const RgbImage style = fixtures::random_image(rng, 40, 40);
    BinaryMask target = fixtures::random_blob_mask(rng, 60, 50);
    if (target.empty()) target = BinaryMask::full(60, 50);
    StyleSpec spec;
    spec.method = t % 2 ? TransferMethod::Wct : TransferMethod::MeanStd;
    const RgbImage out = stylize_image(content, target, style, spec);
    for (int y = 0; y < 50; ++y)
      for (int x = 0; x < 60; ++x)
        if (!target.test(x, y) && out.at(x, y) != content.at(x, y)) ++leaked;
    ++isolation_cases;
  }
  return {worst <= kIdentityTol && leaked == 0,
          fmt("identity: %d cases, max deviation %d/255 (limit %d); isolation: %d cases, %d outside pixels changed",
              cases, worst, kIdentityTol, isolation_cases, leaked)};
}

Outcome statistics_matching() {
  fixtures::Rng rng(505);
  double worst_mean = 0, worst_std = 0, worst_cov = 0;
  int pairs = 0, attempts = 0;
  while (pairs < kStatPairs && attempts < 20 * kStatPairs) {
    ++attempts;
    const RgbImage content = fixtures::random_image(rng, 64, 64, 20, 235);
    const RgbImage style = fixtures::random_image(rng, 48, 48, 20, 235);
    BinaryMask target = fixtures::random_blob_mask(rng, 64, 64);
    if (target.area() < 64) target = BinaryMask::full(64, 64);

    const auto cs_lab = compute_color_stats(content, &target, ColorSpace::LogLms);
    const auto ss_lab = compute_color_stats(style, nullptr, ColorSpace::LogLms);
    const FloatImage ms = mean_std_transfer_working(content, cs_lab, ss_lab, kDefaultEpsilon);
    const auto cs_rgb = compute_color_stats(content, &target, ColorSpace::Rgb);
    const auto ss_rgb = compute_color_stats(style, nullptr, ColorSpace::Rgb);
    const FloatImage wc = wct_transfer_working(content, cs_rgb, ss_rgb, kWctEpsilon);

    // in gamut: every target pixel of the wct output within [0, 1]
    bool in_gamut = true;
    for (int y = 0; y < 64 && in_gamut; ++y)
      for (int x = 0; x < 64; ++x)
        if (target.test(x, y))
          for (int c = 0; c < 3; ++c) {
            const double v = wc.values[(std::size_t(y) * 64 + x) * 3 + c];
            in_gamut = in_gamut && v >= 0.0 && v <= 1.0;
          }
    if (!in_gamut) continue;
    ++pairs;

    const auto got_ms = fixtures::naive_stats(ms.values, &target, 64);
    const auto want_lab = fixtures::naive_stats(lab_values(style), nullptr, 48);
    for (int c = 0; c < 3; ++c) {
      worst_mean = std::max(worst_mean, std::abs(got_ms.mean[c] - want_lab.mean[c]));
      const double sg = std::sqrt(got_ms.cov[c][c]), sw = std::sqrt(want_lab.cov[c][c]);
      worst_std = std::max(worst_std, std::abs(sg - sw) / sw);
    }
    const auto got_wc = fixtures::naive_stats(wc.values, &target, 64);
    const auto want_rgb = fixtures::naive_stats(rgb_values(style), nullptr, 48);
    double num = 0, den = 0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        const double d = got_wc.cov[r][c] - want_rgb.cov[r][c];
        num += d * d;
        den += want_rgb.cov[r][c] * want_rgb.cov[r][c];
      }
    worst_cov = std::max(worst_cov, std::sqrt(num / den));
  }
  const bool pass = pairs == kStatPairs && worst_mean <= kMeanTol && worst_std <= kStdRelTol &&
                    worst_cov <= kCovFrobRelTol;
  return {pass, fmt("%d in-gamut pairs of %d drawn; mean_std worst |dmean| %.2e (limit %.2e), worst std rel %.2e "
                    "(limit %.2f); wct worst cov Frobenius rel %.2e (limit %.2f)",
                    pairs, attempts, worst_mean, kMeanTol, worst_std, kStdRelTol, worst_cov, kCovFrobRelTol)};
}

Outcome dataset_split() {
  std::vector<std::string> ids;
  for (int i = 0; i < 500; ++i) ids.push_back(fmt("apparel_%03d", i));
  const auto a = split_dataset(ids, {0.8, 0.1, 0.1}, 2024);
  const auto b = split_dataset(ids, {0.8, 0.1, 0.1}, 2024);
  std::set<std::string> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  const bool same = a.train == b.train && a.validation == b.validation && a.test == b.test;
  const bool sizes = a.train.size() == 400 && a.validation.size() == 50 && a.test.size() == 50;
  return {sizes && same && all.size() == 500,
          fmt("%zu/%zu/%zu, partition of %zu ids, repeat with same seed %s", a.train.size(), a.validation.size(),
              a.test.size(), all.size(), same ? "identical" : "DIFFERENT")};
}

Outcome performance() {
  // best of three runs, so a cold cache or a scheduler hiccup does not decide
  fixtures::TempDir dir("acc-perf");
  fixtures::AssetMap cat;
  cat["p_a"] = fixtures::make_asset("p_a", 512, 512, 9001);
  cat["p_b"] = fixtures::make_asset("p_b", 512, 512, 9002, {true, 1.4});
  fixtures::write_dataset(dir.path() / "in", cat);
  Workspace ws(dir.path() / "data");
  ws.ingest_directory(dir.path() / "in/images", dir.path() / "in/project.json");

  MergeRecipe recipe;
  recipe.base = {"p_a", SegmentClass::Silhouette};
  recipe.steps = {{"p_b", SegmentClass::SleeveRight}, {"p_b", SegmentClass::SleeveLeft}};
  const auto resolve = ws.resolver();
  double merge_core = 1e9, merge_full = 1e9, styl_core = 1e9, styl_full = 1e9;
  fixtures::Rng rng(606);
  const RgbImage style = fixtures::random_image(rng, 512, 512);
  const auto style_png = encode_png(style);
  const auto& content = cat.at("p_a")->image;
  const BinaryMask target = oracle_part_mask(cat.at("p_a")->annotation, SegmentClass::Silhouette);
  for (int run = 0; run < 3; ++run) {
    auto t0 = Clock::now();
    const MergeResult r = execute_merge(plan_merge(recipe, resolve));
    merge_core = std::min(merge_core, seconds_since(t0));
    t0 = Clock::now();
    ws.merge(recipe);
    merge_full = std::min(merge_full, seconds_since(t0));

    StyleSpec spec;
    spec.method = run % 2 ? TransferMethod::Wct : TransferMethod::MeanStd;
    t0 = Clock::now();
    const RgbImage out = stylize_image(content, target, style, spec);
    styl_core = std::min(styl_core, seconds_since(t0));
    StylizeRequest req;
    req.content_id = "p_a";
    req.style_png = style_png;
    req.method = TransferMethod::Wct;
    t0 = Clock::now();
    ws.stylize(req);
    styl_full = std::min(styl_full, seconds_since(t0));
    (void)r;
    (void)out;
  }
  const bool pass = styl_core < kStylizeSeconds && merge_core < kMergeSeconds;
  return {pass, fmt("512x512 stylize %.1f ms (limit %.0f ms; with PNG decode/encode and storage %.1f ms); 512x512 "
                    "two-step merge %.1f ms (limit %.0f ms; with PNG encode and storage %.1f ms)",
                    styl_core * 1e3, kStylizeSeconds * 1e3, styl_full * 1e3, merge_core * 1e3, kMergeSeconds * 1e3,
                    merge_full * 1e3)};
}

// `cdapf serve` as a child process on a free port.
class ServeProcess {
 public:
  explicit ServeProcess(const std::string& data_dir) {
    int fds[2];
    if (pipe(fds) != 0) return;
    pid_ = fork();
    if (pid_ == 0) {
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      close(fds[1]);
      execl(CDAPF_CLI_PATH, CDAPF_CLI_PATH, "--data-dir", data_dir.c_str(), "serve", "--addr", "127.0.0.1:0",
            static_cast<char*>(nullptr));
      _exit(127);
    }
    close(fds[1]);
    std::string line;
    char ch;
    while (read(fds[0], &ch, 1) == 1 && ch != '\n') line += ch;
    close(fds[0]);
    const auto colon = line.rfind(':');
    if (line.rfind("listening on", 0) == 0 && colon != std::string::npos) port_ = std::stoi(line.substr(colon + 1));
  }
  ~ServeProcess() {
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }
  int port() const { return port_; }

 private:
  pid_t pid_ = -1;
  int port_ = -1;
};

Outcome cli_service_differential() {
  fixtures::TempDir dir("acc-diff");
  fixtures::AssetMap cat = fixtures::sleeve_swap_assets();
  cat["d_c"] = fixtures::make_asset("d_c", 80, 100, 5150);
  fixtures::write_dataset(dir.path() / "in", cat);
  const std::string cli_data = (dir.path() / "cli").string(), svc_data = (dir.path() / "svc").string();
  for (const auto& data : {cli_data, svc_data})
    if (fixtures::run_cli({"--data-dir", data, "ingest", "--images", (dir.path() / "in/images").string(),
                           "--annotations", (dir.path() / "in/project.json").string()})
            .exit_code != 0)
      return {false, "ingest failed"};

  ServeProcess server(svc_data);
  if (server.port() <= 0) return {false, "service did not start"};
  httplib::Client http("127.0.0.1", server.port());
  http.set_read_timeout(120, 0);
  int compared = 0;
  std::vector<std::string> diffs;
  const auto compare = [&](const std::string& what, const std::vector<std::uint8_t>& cli_bytes, const std::string& path) {
    auto r = http.Get(path);
    ++compared;
    if (!r || r->status != 200 || std::vector<std::uint8_t>(r->body.begin(), r->body.end()) != cli_bytes)
      diffs.push_back(what);
  };
  const auto lines = [](const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
      if (!l.empty()) out.push_back(l);
    return out;
  };
  const fs::path results = fs::path(cli_data) / "results";

  // merge
  const auto m = fixtures::run_cli({"--data-dir", cli_data, "merge", "--recipe", CDAPF_TEST_DATA_DIR "/sleeve_swap.recipe"});
  auto mr = http.Post("/merge", recipe_to_json(fixtures::sleeve_swap_recipe()).dump(), "application/json");
  if (m.exit_code != 0 || !mr || mr->status != 200) return {false, "merge request failed"};
  const std::string mid = json::parse(mr->body).at("result_id");
  if (lines(m.out) != std::vector<std::string>{mid}) diffs.push_back("merge id");
  compare("merge image", fixtures::read_file(results / (mid + ".png")), "/results/" + mid + ".png");
  compare("merge provenance", fixtures::read_file(results / (mid + ".provenance.png")),
          "/results/" + mid + "/provenance.png");
  compare("merge legend", fixtures::read_file(results / (mid + ".legend.json")), "/results/" + mid + "/legend.json");

  // stylize: apparel content and merged content, both methods
  const fs::path style = dir.path() / "in/images/d_c.png";
  const auto style_bytes = fixtures::read_file(style);
  auto up = http.Post("/styles", std::string(style_bytes.begin(), style_bytes.end()), "image/png");
  if (!up || up->status != 201) return {false, "style upload failed"};
  const std::string style_ref = json::parse(up->body).at("style_ref");
  struct Styl {
    json content;
    std::string content_arg, method, part;
  };
  const std::vector<Styl> stylizes{{{{"apparel_id", "swap_a"}}, "swap_a", "mean_std", "silhouette"},
                                   {{{"apparel_id", "swap_b"}}, "swap_b", "wct", "collar"},
                                   {{{"result_id", mid}}, mid, "wct", "sleeve_left"},
                                   {{{"result_id", mid}}, mid, "mean_std", "silhouette"}};
  for (const auto& s : stylizes) {
    const auto c = fixtures::run_cli({"--data-dir", cli_data, "stylize", "--content", s.content_arg, "--style",
                                      style.string(), "--method", s.method, "--part", s.part});
    const json body = {{"content", s.content}, {"style", {{"ref", style_ref}}}, {"method", s.method}, {"part", s.part}};
    auto r = http.Post("/stylize", body.dump(), "application/json");
    if (c.exit_code != 0 || !r || r->status != 200) {
      diffs.push_back("stylize " + s.content_arg + " failed");
      continue;
    }
    const std::string sid = json::parse(r->body).at("result_id");
    if (lines(c.out) != std::vector<std::string>{sid}) diffs.push_back("stylize id " + s.method);
    compare("stylize image " + s.method, fixtures::read_file(results / (sid + ".png")), "/results/" + sid + ".png");
  }

  // variations
  const auto v = fixtures::run_cli({"--data-dir", cli_data, "variations", "--apparels", "swap_a,swap_b,d_c", "--parts",
                                    "sleeve_left,sleeve_right,collar", "--limit", "6", "--seed", "77", "--canvas",
                                    "96x128"});
  const json vbody = {{"apparels", {"swap_a", "swap_b", "d_c"}},
                      {"parts", {"sleeve_left", "sleeve_right", "collar"}},
                      {"limit", 6},
                      {"seed", 77},
                      {"canvas", {{"width", 96}, {"height", 128}}}};
  auto vr = http.Post("/variations", vbody.dump(), "application/json");
  if (v.exit_code != 0 || !vr || vr->status != 200) return {false, "variations request failed"};
  std::vector<std::string> svc_ids;
  const json vlist = json::parse(vr->body).at("variations");
  for (const auto& item : vlist) svc_ids.push_back(item.at("result_id"));
  if (lines(v.out) != svc_ids) diffs.push_back("variation ids");
  for (const auto& id : svc_ids) compare("variation image", fixtures::read_file(results / (id + ".png")), "/results/" + id + ".png");

  std::string detail = fmt("%d artifacts compared (merge, %zu stylize, %zu variations)", compared, stylizes.size(),
                           svc_ids.size());
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {diffs.empty() && !svc_ids.empty(), detail};
}

Outcome via_round_trip() {
  const auto bytes = fixtures::read_file(CDAPF_TEST_DATA_DIR "/fixture_project.json");
  const std::string text(bytes.begin(), bytes.end());
  const DimsLookup dims = {{"dress_001", {120, 160}},
                           {"dress_002", {96, 128}},
                           {"top_003", {128, 128}},
                           {"dress_004", {100, 150}},
                           {"skirt_005", {80, 120}}};
  const auto first = parse_via_project(text, dims);
  const std::string written = write_via_project(first);
  const auto second = parse_via_project(written, dims);
  const bool fixpoint = first.size() == 5 && second == first && write_via_project(second) == written;

  json project = json::parse(text);
  auto& meta = project["_via_img_metadata"].begin().value();
  meta["regions"].push_back({{"shape_attributes", {{"name", "ellipse"}, {"cx", 20}, {"cy", 20}, {"rx", 5}, {"ry", 3}, {"theta", 0}}},
                             {"region_attributes", {{"class", "print"}}}});
  std::string code = "none";
  try {
    parse_via_project(project.dump(), dims);
  } catch (const Error& e) {
    code = std::string(to_string(e.code()));
  }
  return {fixpoint && code == "UnsupportedShape",
          fmt("%zu images, fixpoint %s; ellipse region -> %s", first.size(), fixpoint ? "holds" : "BROKEN",
              code.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"iou-oracle", iou_oracle},
      {"raster-oracle", raster_oracle},
      {"merge-provenance", merge_provenance},
      {"sleeve-swap", sleeve_swap},
      {"style-identity-and-isolation", style_identity},
      {"statistics-matching", statistics_matching},
      {"dataset-split", dataset_split},
      {"performance", performance},
      {"cli-service-differential", cli_service_differential},
      {"via-round-trip", via_round_trip},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
