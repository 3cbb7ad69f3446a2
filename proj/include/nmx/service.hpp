#pragma once

#include <map>
#include <memory>
#include <string>

#include "nmx/inference.hpp"
#include "nmx/noisymax.hpp"

namespace nmx {

struct ServiceOptions {
  std::string host = "127.0.0.1";  // loopback unless opened explicitly
  int port = 8080;                 // 0 picks a free port
  std::size_t expansion_cap = kDefaultExpansionCap;
  std::size_t factor_cap = kFactorCap;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Local HTTP workbench over versioned network lineages.
//
//   GET   /networks
//   POST  /networks                           nmx-net body -> new lineage
//   GET   /networks/{id}/graph
//   POST  /networks/{id}/view                 ViewSpec -> nodes + layout
//   POST  /networks/{id}/extract              ViewSpec -> new lineage
//   POST  /networks/{id}/infer                {evidence, query} -> marginals
//   PATCH /networks/{id}/nodes/{node}/leak    {base, leak} -> new version
//   GET   /networks/{id}/diff/{v1}/{v2}       -> annotation
//   GET   /networks/{id}/export?format=nmx-net|expanded
//
// Reads accept ?version=; every response names the version it used.
// Errors: 400 schema, 404 unknown id, 409 stale base, 422 invariant
// violation (body = validation report), 507 capacity.
class WorkbenchService {
 public:
  explicit WorkbenchService(ServiceOptions options = {});
  ~WorkbenchService();
  WorkbenchService(const WorkbenchService&) = delete;
  WorkbenchService& operator=(const WorkbenchService&) = delete;

  // Routing without sockets; the HTTP server delegates here.
  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query, const std::string& body);

  // Binds the listening socket and returns the port.
  int bind();
  // Serves until stop(); requires bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nmx
