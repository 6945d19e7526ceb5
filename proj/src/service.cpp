#include "cdapf/service.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <regex>
#include <set>

#include "cdapf/api_json.hpp"
#include "cdapf/png_io.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cdapf {
namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";
constexpr const char* kPng = "image/png";

std::string trimmed_base64(std::string_view text) {
  if (text.starts_with("data:")) {
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "malformed data URL");
    text.remove_prefix(comma + 1);
  }
  std::string out;
  out.reserve(text.size());
  for (const char c : text)
    if (c != '\n' && c != '\r' && c != ' ' && c != '\t') out.push_back(c);
  return out;
}

std::vector<std::uint8_t> decode_base64(std::string_view text) {
  const std::string clean = trimmed_base64(text);
  if (clean.size() % 4 != 0)
    throw Error(ErrorCode::InvalidArgument, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  if (clean.empty()) return out;
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "invalid base64 payload");
  std::size_t pad = 0;
  if (clean.ends_with("==")) pad = 2;
  else if (clean.ends_with('=')) pad = 1;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

void require_object(const json& j, std::string_view where) {
  if (!j.is_object())
    throw Error(ErrorCode::ValidationFailed, std::string(where) + " must be an object");
}

std::string require_string(const json& j, const char* key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get_ref<const std::string&>().empty())
    throw Error(ErrorCode::ValidationFailed,
                std::string(where) + "." + key + " must be a non-empty string");
  return it->get<std::string>();
}

SegmentClass part_from_json(const json& j, std::string_view where) {
  if (!j.is_string())
    throw Error(ErrorCode::ValidationFailed, std::string(where) + " must be a part name");
  const auto cls = class_from_name(j.get_ref<const std::string&>());
  if (!cls)
    throw Error(ErrorCode::UnknownClass, "unknown part '" + j.get<std::string>() + "'",
                {{"part", j.get<std::string>()}});
  return *cls;
}

std::uint64_t uint_from_json(const json& j, std::string_view where, std::uint64_t max) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0) ||
      j.get<std::uint64_t>() > max)
    throw Error(ErrorCode::ValidationFailed,
                std::string(where) + " must be an integer in [0, " + std::to_string(max) + "]");
  return j.get<std::uint64_t>();
}

std::string result_url(const std::string& id, std::string_view suffix) {
  return "/results/" + id + std::string(suffix);
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_png(httplib::Response& res, const std::vector<std::uint8_t>& bytes) {
  res.status = 200;
  res.set_content(std::string(bytes.begin(), bytes.end()), kPng);
}

void send_error(httplib::Response& res, const Error& e) {
  res.status = http_status_for(e.code());
  res.set_content(error_to_json(e.code(), e.what(), e.details()).dump(), kJson);
}

// A VIA fragment for exactly one image: a whole project, a bare metadata
// map, or a single metadata entry. Returns the normalized text plus the
// stem of the one filename it mentions.
std::pair<std::string, std::string> normalize_fragment(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedProject, std::string("annotation is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedProject, "annotation must be a JSON object");
  if (j.contains("filename") && j.contains("regions")) j = json{{"entry", j}};

  const json* meta = &j;
  if (const auto it = j.find("_via_img_metadata"); it != j.end()) meta = &*it;
  if (!meta->is_object()) throw Error(ErrorCode::MalformedProject, "_via_img_metadata must be an object");
  std::set<std::string> stems;
  for (const auto& [key, entry] : meta->items()) {
    if (key.starts_with('_')) continue;
    if (!entry.is_object() || !entry.contains("filename") || !entry["filename"].is_string())
      throw Error(ErrorCode::MalformedProject, "metadata entry '" + key + "' has no filename");
    stems.insert(std::filesystem::path(entry["filename"].get<std::string>()).stem().string());
  }
  if (stems.size() != 1)
    throw Error(ErrorCode::ValidationFailed, "annotation must describe exactly one image",
                {{"images", stems.size()}});
  return {j.dump(), *stems.begin()};
}

std::vector<std::uint8_t> resolve_image_source(Workspace& ws, const json& src, std::string_view where) {
  require_object(src, where);
  require_only(src, {"image_base64", "ref"}, where);
  const bool inline_image = src.contains("image_base64");
  if (inline_image == src.contains("ref"))
    throw Error(ErrorCode::ValidationFailed,
                std::string(where) + " needs exactly one of image_base64, ref");
  if (inline_image) {
    if (!src["image_base64"].is_string())
      throw Error(ErrorCode::ValidationFailed, std::string(where) + ".image_base64 must be a string");
    return decode_base64(src["image_base64"].get_ref<const std::string&>());
  }
  const std::string ref = require_string(src, "ref", where);
  if (!ContentAddress::is_valid(ref))
    throw Error(ErrorCode::ValidationFailed, std::string(where) + ".ref is not a content address");
  return ws.store().get(ContentAddress(ref));
}

StylizeRequest stylize_request_from_json(Workspace& ws, const json& body) {
  require_object(body, "request");
  require_only(body, {"content", "style", "style_mask", "method", "epsilon", "part"}, "request");
  StylizeRequest out;

  if (!body.contains("content")) throw Error(ErrorCode::ValidationFailed, "request.content is required");
  const json& content = body["content"];
  require_object(content, "content");
  require_only(content, {"apparel_id", "result_id"}, "content");
  if (content.contains("apparel_id") == content.contains("result_id"))
    throw Error(ErrorCode::ValidationFailed, "content needs exactly one of apparel_id, result_id");
  if (content.contains("result_id")) {
    out.content_id = require_string(content, "result_id", "content");
    if (!ws.find_result(out.content_id))
      throw Error(ErrorCode::NotFound, "unknown result " + out.content_id, {{"result_id", out.content_id}});
  } else {
    out.content_id = require_string(content, "apparel_id", "content");
    ws.load_apparel(out.content_id);
  }

  if (!body.contains("style")) throw Error(ErrorCode::ValidationFailed, "request.style is required");
  out.style_png = resolve_image_source(ws, body["style"], "style");
  if (body.contains("style_mask") && !body["style_mask"].is_null())
    out.style_mask_png = resolve_image_source(ws, body["style_mask"], "style_mask");

  if (body.contains("method")) {
    const json& m = body["method"];
    const auto method = m.is_string() ? parse_method(m.get_ref<const std::string&>()) : std::nullopt;
    if (!method)
      throw Error(ErrorCode::ValidationFailed, "method must be mean_std or wct", {{"method", m}});
    out.method = *method;
  }
  if (body.contains("epsilon")) {
    const json& e = body["epsilon"];
    if (!e.is_number() || !(e.get<double>() >= 0.0))
      throw Error(ErrorCode::ValidationFailed, "epsilon must be a non-negative number");
    out.epsilon = e.get<double>();
  }
  if (body.contains("part")) out.part = part_from_json(body["part"], "part");
  return out;
}

json apparel_to_json(const std::string& id, const ApparelEntry& e) {
  return {{"apparel_id", id},
          {"width", e.width},
          {"height", e.height},
          {"image", e.image.hex()},
          {"annotation", e.annotation.hex()},
          {"parts", e.parts},
          {"image_url", "/apparels/" + id + "/image.png"}};
}

ResultEntry require_result(const Workspace& ws, const std::string& id) {
  auto entry = ws.find_result(id);
  if (!entry) throw Error(ErrorCode::NotFound, "unknown result " + id, {{"result_id", id}});
  return *entry;
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownApparel:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::DuplicateId:
      return 409;
    case ErrorCode::IntegrityError:
    case ErrorCode::StorageIo:
      return 500;
    default:
      return 400;
  }
}

struct ApiServer::Impl {
  Workspace& ws;
  ServerOptions options;
  httplib::Server server;

  Impl(Workspace& w, ServerOptions o) : ws(w), options(std::move(o)) { install(); }

  // Wraps a handler so library errors become ApiError bodies.
  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_error(res, Error(ErrorCode::ValidationFailed, e.what()));
      }
    };
  }

  void install() {
    server.set_payload_max_length(std::size_t{256} << 20);
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Expose-Headers", "Content-Type"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Max-Age", "600");
      res.status = 204;
    });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      const ErrorCode code = res.status == 404 ? ErrorCode::NotFound : ErrorCode::InvalidArgument;
      res.set_content(error_to_json(code, "no route for " + req.method + " " + req.path).dump(), kJson);
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      res.status = 500;
      res.set_content(error_to_json(ErrorCode::StorageIo, message).dump(), kJson);
    });

    server.Get("/schema", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(std::string(api_schema()), "application/schema+json");
    });

    server.Post("/apparels", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.is_multipart_form_data() || !req.has_file("image") || !req.has_file("annotation"))
        throw Error(ErrorCode::ValidationFailed,
                    "expected multipart form with 'image' and 'annotation' parts");
      const std::string& png = req.get_file_value("image").content;
      const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size());
      const RgbImage image = decode_png(bytes);
      const auto [project, stem] = normalize_fragment(req.get_file_value("annotation").content);
      const DimsLookup dims{{stem, Dims{image.width(), image.height()}}};
      auto records = parse_via_project(project, dims);
      const std::string id = ws.register_apparel(bytes, std::move(records.front()));
      send_json(res, {{"apparel_id", id}}, 201);
    }));

    server.Get("/apparels", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& [id, entry] : ws.store().snapshot()->apparels)
        list.push_back(apparel_to_json(id, entry));
      send_json(res, {{"apparels", list}});
    }));

    server.Get(R"(/apparels/([^/]+)/image\.png)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const auto snap = ws.store().snapshot();
                 const auto it = snap->apparels.find(id);
                 if (it == snap->apparels.end())
                   throw Error(ErrorCode::UnknownApparel, "unknown apparel '" + id + "'", {{"apparel_id", id}});
                 send_png(res, ws.store().get(it->second.image));
               }));

    server.Get(R"(/apparels/([^/]+)/masks/([^/]+)\.png)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const std::string cls_text = req.matches[2];
                 const auto cls = parse_class(cls_text);
                 if (!cls)
                   throw Error(ErrorCode::UnknownClass, "unknown class '" + cls_text + "'", {{"class", cls_text}});
                 ws.load_apparel(id);  // UnknownApparel before MissingPart
                 try {
                   send_png(res, ws.mask_png(id, *cls));
                 } catch (const Error& e) {
                   if (e.code() != ErrorCode::MissingPart) throw;
                   // Absent resource: report MissingPart with a 404.
                   send_error(res, e);
                   res.status = 404;
                 }
               }));

    server.Get(R"(/apparels/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const auto snap = ws.store().snapshot();
                 const auto it = snap->apparels.find(id);
                 if (it == snap->apparels.end())
                   throw Error(ErrorCode::UnknownApparel, "unknown apparel '" + id + "'", {{"apparel_id", id}});
                 send_json(res, apparel_to_json(id, it->second));
               }));

    server.Post("/merge", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const MergeRecipe recipe = recipe_from_json(parse_body(req));
      const MergeArtifacts out = ws.merge(recipe);
      send_json(res, {{"result_id", out.result_id},
                      {"image_url", result_url(out.result_id, ".png")},
                      {"provenance_url", result_url(out.result_id, "/provenance.png")},
                      {"legend_url", result_url(out.result_id, "/legend.json")}});
    }));

    server.Get(R"(/results/([0-9a-f]{64})\.png)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_png(res, ws.store().get(require_result(ws, req.matches[1]).image));
               }));
    server.Get(R"(/results/([0-9a-f]{64})/thumbnail\.png)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto entry = require_result(ws, req.matches[1]);
                 send_png(res, encode_png(make_thumbnail(decode_png(ws.store().get(entry.image)))));
               }));
    server.Get(R"(/results/([0-9a-f]{64})/provenance\.png)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto entry = require_result(ws, req.matches[1]);
                 if (!entry.provenance)
                   throw Error(ErrorCode::NotFound, "result has no provenance map", {{"result_id", req.matches[1]}});
                 send_png(res, ws.store().get(*entry.provenance));
               }));
    server.Get(R"(/results/([0-9a-f]{64})/legend\.json)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto entry = require_result(ws, req.matches[1]);
                 if (!entry.legend)
                   throw Error(ErrorCode::NotFound, "result has no legend", {{"result_id", req.matches[1]}});
                 res.set_content(ws.store().get_string(*entry.legend), kJson);
               }));

    server.Post("/styles", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size());
      decode_png(bytes);  // reject non-images up front
      send_json(res, {{"style_ref", ws.store().put(bytes).hex()}}, 201);
    }));

    server.Post("/stylize", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const StylizeRequest request = stylize_request_from_json(ws, parse_body(req));
      const StylizeArtifacts out = ws.stylize(request);
      send_json(res, {{"result_id", out.result_id},
                      {"image_url", result_url(out.result_id, ".png")},
                      {"style_ref", out.style_ref}});
    }));

    server.Post("/variations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      require_object(body, "request");
      require_only(body, {"apparels", "parts", "limit", "seed", "canvas"}, "request");
      for (const char* key : {"apparels", "parts", "limit", "seed"})
        if (!body.contains(key))
          throw Error(ErrorCode::ValidationFailed, std::string("request.") + key + " is required");
      if (!body["apparels"].is_array() || !body["parts"].is_array())
        throw Error(ErrorCode::ValidationFailed, "apparels and parts must be arrays");
      std::vector<std::string> ids;
      for (const auto& v : body["apparels"]) {
        if (!v.is_string()) throw Error(ErrorCode::ValidationFailed, "apparel ids must be strings");
        ids.push_back(v.get<std::string>());
      }
      std::vector<SegmentClass> parts;
      for (const auto& v : body["parts"]) parts.push_back(part_from_json(v, "parts[]"));
      const auto limit = uint_from_json(body["limit"], "limit", 1000);
      const auto seed = uint_from_json(body["seed"], "seed", std::numeric_limits<std::uint64_t>::max());
      std::optional<Canvas> canvas;
      if (body.contains("canvas")) {
        // Reuse the recipe reader for canvas validation.
        json probe = {{"base", {{"apparel_id", "x"}}}, {"canvas", body["canvas"]}};
        canvas = recipe_from_json(probe).canvas;
      }

      json list = json::array();
      for (const auto& v : ws.variations(ids, parts, limit, seed, canvas))
        list.push_back({{"recipe", recipe_to_json(v.recipe)},
                        {"result_id", v.result_id},
                        {"image_url", result_url(v.result_id, ".png")},
                        {"thumbnail_url", result_url(v.result_id, "/thumbnail.png")}});
      send_json(res, {{"variations", list}});
    }));

    server.Put("/insights/catalog", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const CatalogIngest ingest = ws.ingest_sales_catalog(req.body);
      json rejected = json::array();
      for (const auto& r : ingest.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
      send_json(res, {{"records", ingest.records.size()}, {"rejected", rejected}});
    }));

    server.Get("/insights/attributes", guarded([this](const httplib::Request& req, httplib::Response& res) {
      for (const auto& [key, value] : req.params)
        if (key != "season")
          throw Error(ErrorCode::UnknownField, "unknown query parameter '" + key + "'", {{"field", key}});
      std::optional<std::string> season;
      if (req.has_param("season") && !req.get_param_value("season").empty())
        season = req.get_param_value("season");
      send_json(res, ranking_to_json(ws.insights(season)));
    }));
  }
};

ApiServer::ApiServer(Workspace& workspace, ServerOptions options)
    : impl_(std::make_unique<Impl>(workspace, std::move(options))) {}

ApiServer::~ApiServer() { stop(); }

bool ApiServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int ApiServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}
bool ApiServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
bool ApiServer::is_running() const { return impl_->server.is_running(); }
void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }
void ApiServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace cdapf
