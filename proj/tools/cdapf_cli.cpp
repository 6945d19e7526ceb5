// cdapf: batch front end over a data directory.
//
// Exit codes: 0 ok, 1 usage, 2 validation, 3 not found, 4 I/O.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cdapf/api_json.hpp"
#include "cdapf/error.hpp"
#include "cdapf/metrics.hpp"
#include "cdapf/png_io.hpp"
#include "cdapf/service.hpp"
#include "cdapf/workspace.hpp"

namespace fs = std::filesystem;
using namespace cdapf;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string(), {{"path", path.string()}});
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  const auto b = read_bytes(path);
  return {b.begin(), b.end()};
}

void write_bytes(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::StorageIo, "cannot write " + path.string(), {{"path", path.string()}});
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_bytes(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

SegmentClass part_arg(const std::string& text) {
  const auto cls = parse_class(text);
  if (!cls) throw Error(ErrorCode::UnknownClass, "unknown part '" + text + "'", {{"part", text}});
  return *cls;
}

std::optional<Canvas> canvas_arg(const std::string& text) {
  if (text.empty()) return std::nullopt;
  int w = 0, h = 0;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> w >> x >> h) || x != 'x' || !in.eof() || w < 1 || h < 1)
    throw Error(ErrorCode::InvalidArgument, "canvas must look like WxH, got '" + text + "'");
  return Canvas{w, h, kWhite};
}

// Merge artifacts as written by both `merge` and `variations`.
void write_merge_outputs(const fs::path& results, const MergeArtifacts& out) {
  write_bytes(results / (out.result_id + ".png"), out.image_png);
  write_bytes(results / (out.result_id + ".provenance.png"), out.provenance_png);
  write_bytes(results / (out.result_id + ".legend.json"), out.legend_json);
}

// Predictions: DIR/<apparel_id>/<class>.png, one mask per predicted class.
std::vector<IoUReport> evaluate_dir(Workspace& ws, const fs::path& dir, bool include_background,
                                    std::vector<std::string>& ids) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::NotFound, "not a directory: " + dir.string());
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw Error(ErrorCode::EmptyInput, "no prediction directories in " + dir.string());

  std::vector<IoUReport> reports;
  for (const auto& sub : subdirs) {
    const std::string id = sub.filename().string();
    const auto asset = ws.load_apparel(id);
    const MaskSet targets = rasterize_apparel(asset->annotation);
    MaskSet predictions(targets.dims().width, targets.dims().height);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(sub))
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) predictions.set(part_arg(f.stem().string()), decode_mask_png(read_bytes(f)));
    reports.push_back(evaluate(targets, predictions, {include_background}));
    ids.push_back(id);
  }
  return reports;
}

ApiServer* g_server = nullptr;
extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cdapf: apparel segmentation, merge and style pipeline"};
  app.require_subcommand(1);
  std::string data_dir = "cdapf-data";
  app.add_option("--data-dir", data_dir, "store and output directory")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "register images with their VIA annotations");
  std::string images_dir, annotations_file;
  ingest->add_option("--images", images_dir, "directory of <apparel_id>.png")->required();
  ingest->add_option("--annotations", annotations_file, "VIA project JSON")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "IoU of predicted masks against stored annotations");
  std::string predictions_dir, eval_mode = "per-image";
  bool include_background = false;
  eval->add_option("--predictions", predictions_dir, "DIR/<apparel_id>/<class>.png")->required();
  eval->add_option("--mode", eval_mode, "per-image | aggregate")
      ->check(CLI::IsMember({"per-image", "aggregate"}))
      ->capture_default_str();
  eval->add_flag("--include-background", include_background, "also score the background class");

  // merge
  auto* merge = app.add_subcommand("merge", "execute merge recipes");
  std::string recipe_file;
  merge->add_option("--recipe", recipe_file, "recipe file")->required();

  // stylize
  auto* styl = app.add_subcommand("stylize", "restyle a part of an apparel or result");
  std::string content_id, style_file, style_mask_file, method_text = "mean_std", part_text = "silhouette";
  double epsilon = kDefaultEpsilon;
  styl->add_option("--content", content_id, "apparel id or result id")->required();
  styl->add_option("--style", style_file, "style PNG")->required();
  styl->add_option("--style-mask", style_mask_file, "mask PNG restricting style statistics");
  styl->add_option("--method", method_text, "mean_std | wct")->capture_default_str();
  styl->add_option("--epsilon", epsilon, "covariance regularizer")->capture_default_str();
  styl->add_option("--part", part_text, "target part")->capture_default_str();

  // variations
  auto* vars = app.add_subcommand("variations", "seeded merge variations");
  std::string var_ids, var_parts, var_canvas;
  std::size_t limit = 0;
  std::uint64_t seed = 0;
  vars->add_option("--apparels", var_ids, "comma-separated apparel ids")->required();
  vars->add_option("--parts", var_parts, "comma-separated parts")->required();
  vars->add_option("--limit", limit, "maximum number of variations")->required();
  vars->add_option("--seed", seed, "generator seed")->required();
  vars->add_option("--canvas", var_canvas, "WxH canvas (default: base size)");

  // split
  auto* split = app.add_subcommand("split", "seeded train/validation/test split");
  std::string ratios_text = "0.8,0.1,0.1", ids_file;
  std::uint64_t split_seed = 0;
  split->add_option("--ratios", ratios_text, "train,validation,test")->capture_default_str();
  split->add_option("--seed", split_seed, "shuffle seed")->required();
  split->add_option("--ids", ids_file, "file with one id per line (default: registered apparels)");

  // insights
  auto* ins = app.add_subcommand("insights", "attribute ranking over a sales catalog");
  std::string catalog_file, season;
  ins->add_option("--catalog", catalog_file, "CSV apparel_id,attributes,units_sold[,season]");
  ins->add_option("--season", season, "only rows of this season");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP API");
  std::string addr = "127.0.0.1:8080", cors_origin = "*";
  serve->add_option("--addr", addr, "HOST:PORT (port 0 picks a free one)")->capture_default_str();
  serve->add_option("--cors-origin", cors_origin, "Access-Control-Allow-Origin value")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const fs::path root(data_dir);
    Workspace ws(root);

    if (*ingest) {
      for (const auto& id : ws.ingest_directory(images_dir, annotations_file)) std::cout << id << "\n";
    } else if (*eval) {
      std::vector<std::string> ids;
      const auto reports = evaluate_dir(ws, predictions_dir, include_background, ids);
      const auto mode = eval_mode == "aggregate" ? ReportMode::DatasetAggregate : ReportMode::PerImageMean;
      const FormattedReport formatted = format_report(reports, mode);
      write_bytes(root / "reports" / "iou.txt", formatted.text);
      write_bytes(root / "reports" / "iou.csv", formatted.csv);
      std::cout << formatted.text;
    } else if (*merge) {
      const auto recipes = parse_recipes(read_text(recipe_file));
      for (const auto& r : recipes) {
        const MergeArtifacts out = ws.merge(r);
        write_merge_outputs(root / "results", out);
        std::cout << out.result_id << "\n";
      }
    } else if (*styl) {
      StylizeRequest req;
      req.content_id = content_id;
      req.style_png = read_bytes(style_file);
      if (!style_mask_file.empty()) req.style_mask_png = read_bytes(style_mask_file);
      const auto method = parse_method(method_text);
      if (!method)
        throw Error(ErrorCode::ValidationFailed, "method must be mean_std or wct", {{"method", method_text}});
      req.method = *method;
      req.epsilon = epsilon;
      req.part = part_arg(part_text);
      const StylizeArtifacts out = ws.stylize(req);
      write_bytes(root / "results" / (out.result_id + ".png"), out.image_png);
      std::cout << out.result_id << "\n";
    } else if (*vars) {
      std::vector<SegmentClass> parts;
      for (const auto& p : split_list(var_parts)) parts.push_back(part_arg(p));
      const auto list = ws.variations(split_list(var_ids), parts, limit, seed, canvas_arg(var_canvas));
      std::vector<MergeRecipe> recipes;
      for (const auto& v : list) {
        // Already stored by the workspace; re-running is a cache hit.
        write_merge_outputs(root / "results", ws.merge(v.recipe));
        recipes.push_back(v.recipe);
        std::cout << v.result_id << "\n";
      }
      write_bytes(root / "results" / ("variations-" + std::to_string(seed) + ".recipe"), write_recipes(recipes));
    } else if (*split) {
      const auto r = split_list(ratios_text);
      if (r.size() != 3) throw Error(ErrorCode::InvalidArgument, "--ratios needs three comma-separated values");
      SplitRatios ratios;
      try {
        ratios = {std::stod(r[0]), std::stod(r[1]), std::stod(r[2])};
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "--ratios values must be numbers");
      }
      std::vector<std::string> ids;
      if (!ids_file.empty()) {
        std::istringstream in(read_text(ids_file));
        for (std::string line; std::getline(in, line);) {
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty()) ids.push_back(line);
        }
      } else {
        for (const auto& [id, entry] : ws.store().snapshot()->apparels) ids.push_back(id);
      }
      const DatasetSplit s = split_dataset(ids, ratios, split_seed);
      const auto dump = [&](const char* name, const std::vector<std::string>& v) {
        std::string text;
        for (const auto& id : v) text += id + "\n";
        write_bytes(root / "splits" / (std::string(name) + ".txt"), text);
        std::cout << name << " " << v.size() << "\n";
      };
      dump("train", s.train);
      dump("validation", s.validation);
      dump("test", s.test);
    } else if (*ins) {
      if (!catalog_file.empty()) {
        const CatalogIngest ingested = ws.ingest_sales_catalog(read_text(catalog_file));
        for (const auto& rej : ingested.rejected)
          std::cerr << "warning: line " << rej.line << ": " << rej.reason << "\n";
      }
      const auto ranking = ws.insights(season.empty() ? std::nullopt : std::optional(season));
      const std::string csv = ranking_to_csv(ranking);
      write_bytes(root / "reports" / "insights.csv", csv);
      std::cout << csv;
    } else if (*serve) {
      const auto colon = addr.rfind(':');
      int port = -1;
      if (colon != std::string::npos) {
        try {
          port = std::stoi(addr.substr(colon + 1));
        } catch (const std::exception&) {
        }
      }
      if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "--addr must be HOST:PORT");
      const std::string host = addr.substr(0, colon);
      ApiServer server(ws, ServerOptions{cors_origin});
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::StorageIo, "cannot bind " + addr);
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    if (!e.details().is_null()) std::cerr << "details: " << e.details().dump() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: StorageIo: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: StorageIo: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
