#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "cdapf/error.hpp"
#include "cdapf/workspace.hpp"

namespace cdapf {

struct ServerOptions {
  std::string cors_origin = "*";
};

// HTTP status for an error code outside endpoint-specific overrides.
int http_status_for(ErrorCode code);

// The published request/response schema (schema/api.schema.json).
std::string_view api_schema();

// JSON-over-HTTP front end of a Workspace. Every handler delegates to one
// Workspace call and serializes its result; errors become a single
// {"error": {code, message, details}} body.
class ApiServer {
 public:
  explicit ApiServer(Workspace& workspace, ServerOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  bool listen(const std::string& host, int port);
  int bind_to_any_port(const std::string& host);
  // Port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  bool listen_after_bind();
  bool is_running() const;
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cdapf
