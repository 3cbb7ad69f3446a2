#include "nmx/service.hpp"

#include <mutex>
#include <shared_mutex>
#include <sstream>

#include <httplib.h>

#include "nmx/io.hpp"
#include "nmx/layout.hpp"
#include "nmx/subnet.hpp"
#include "nmx/versioning.hpp"

namespace nmx {

namespace {

// Internal control flow for non-2xx answers.
struct HttpFailure {
  int status;
  Json body;
};

[[noreturn]] void fail(int status, const std::string& message) { throw HttpFailure{status, Json{{"error", message}}}; }

struct Lineage {
  std::string id;
  mutable std::shared_mutex state_mutex;  // guards versions/history/current
  std::mutex write_mutex;                 // one mutation at a time
  std::map<std::string, std::shared_ptr<const Network>> versions;
  std::vector<std::string> history;
  std::string current;
};

struct Snapshot {
  std::string version;
  std::shared_ptr<const Network> net;
};

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(path);
  while (std::getline(in, part, '/')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

Json body_json(const std::string& body) {
  if (body.empty()) return Json::object();
  return parse_json(body);
}

std::string state_string(const Json& value, const std::string& node) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer() && value.get<long long>() >= 0) return std::to_string(value.get<long long>());
  throw SchemaError("evidence." + node, "expected a state name or index");
}

}  // namespace

struct WorkbenchService::Impl {
  ServiceOptions options;
  std::shared_mutex registry_mutex;
  std::map<std::string, std::shared_ptr<Lineage>> lineages;
  int next_id = 1;
  httplib::Server server;

  std::shared_ptr<Lineage> find(const std::string& id) {
    std::shared_lock lock(registry_mutex);
    auto it = lineages.find(id);
    if (it == lineages.end()) fail(404, "unknown network '" + id + "'");
    return it->second;
  }

  std::pair<std::string, std::string> create(Network net) {
    auto lineage = std::make_shared<Lineage>();
    const std::string version = version_id(net);
    lineage->versions[version] = std::make_shared<const Network>(std::move(net));
    lineage->history.push_back(version);
    lineage->current = version;
    std::unique_lock lock(registry_mutex);
    lineage->id = "n" + std::to_string(next_id++);
    lineages[lineage->id] = lineage;
    return {lineage->id, version};
  }

  static Snapshot snapshot(const Lineage& lineage, const std::map<std::string, std::string>& query) {
    std::shared_lock lock(lineage.state_mutex);
    std::string version = lineage.current;
    if (auto it = query.find("version"); it != query.end()) version = it->second;
    auto v = lineage.versions.find(version);
    if (v == lineage.versions.end()) fail(404, "unknown version '" + version + "'");
    return {version, v->second};
  }

  static Snapshot at_version(const Lineage& lineage, const std::string& version) {
    return snapshot(lineage, {{"version", version}});
  }

  HttpResponse list() {
    Json out = Json::array();
    std::shared_lock lock(registry_mutex);
    for (const auto& [id, lineage] : lineages) {
      std::shared_lock state(lineage->state_mutex);
      const Network& net = *lineage->versions.at(lineage->current);
      out.push_back(Json{{"id", id},
                         {"version", lineage->current},
                         {"versions", lineage->history},
                         {"title", net.title()},
                         {"nodes", net.size()},
                         {"arcs", net.arc_count()}});
    }
    return {200, out.dump(), "application/json"};
  }

  HttpResponse upload(const std::string& body) {
    auto [id, version] = create(load_network(body));
    return {201, Json{{"id", id}, {"version", version}}.dump(), "application/json"};
  }

  HttpResponse graph(const Lineage& lineage, const std::map<std::string, std::string>& query) {
    const Snapshot snap = snapshot(lineage, query);
    Json arcs = Json::array();
    for (const auto& [p, c] : snap.net->arcs()) arcs.push_back(Json::array({p.str(), c.str()}));
    return {200,
            Json{{"id", lineage.id}, {"version", snap.version}, {"network", network_to_json(*snap.net)}, {"arcs", arcs}}
                .dump(),
            "application/json"};
  }

  static ViewSpec view_of(Json doc) {
    doc.erase("version");
    doc.erase("policy");
    return view_from_json(doc);
  }

  HttpResponse view(const Lineage& lineage, const std::map<std::string, std::string>& query, const Json& doc) {
    auto q = query;
    if (doc.contains("version") && doc["version"].is_string()) q["version"] = doc["version"].get<std::string>();
    const Snapshot snap = snapshot(lineage, q);
    const std::set<NodeId> nodes = select_view(*snap.net, view_of(doc));
    Json ids = Json::array();
    for (const auto& id : nodes) ids.push_back(id.str());
    return {200,
            Json{{"version", snap.version}, {"nodes", ids}, {"layout", layout_to_json(compute_layout(*snap.net, nodes))}}
                .dump(),
            "application/json"};
  }

  HttpResponse extract(const Lineage& lineage, const std::map<std::string, std::string>& query, const Json& doc) {
    auto q = query;
    if (doc.contains("version") && doc["version"].is_string()) q["version"] = doc["version"].get<std::string>();
    const Snapshot snap = snapshot(lineage, q);
    ExtractionOptions opts;
    opts.factor_cap = options.factor_cap;
    if (doc.contains("policy")) {
      if (!doc["policy"].is_string()) throw SchemaError("policy", "expected a string");
      opts.policy = parse_policy(doc["policy"].get<std::string>());
    }
    const ViewSpec spec = view_of(doc);
    Subnetwork sub = extract_subnetwork(*snap.net, select_view(*snap.net, spec), opts, spec);
    auto [id, version] = create(std::move(sub.network));
    return {201, Json{{"id", id}, {"version", version}, {"source_version", snap.version}}.dump(), "application/json"};
  }

  HttpResponse infer(const Lineage& lineage, const std::map<std::string, std::string>& query, const Json& doc) {
    auto q = query;
    if (doc.contains("version") && doc["version"].is_string()) q["version"] = doc["version"].get<std::string>();
    const Snapshot snap = snapshot(lineage, q);
    std::map<std::string, std::string> assignments;
    if (doc.contains("evidence")) {
      if (!doc["evidence"].is_object()) throw SchemaError("evidence", "expected an object");
      for (const auto& [node, value] : doc["evidence"].items()) assignments[node] = state_string(value, node);
    }
    std::set<NodeId> targets;
    if (doc.contains("query")) {
      if (!doc["query"].is_array()) throw SchemaError("query", "expected an array of node ids");
      for (const auto& n : doc["query"]) {
        if (!n.is_string()) throw SchemaError("query", "expected node ids");
        targets.insert(NodeId(n.get<std::string>()));
      }
    }
    const Evidence evidence = parse_evidence(*snap.net, assignments);
    return {200, canonical_dump(inference_report(*snap.net, evidence, targets, options.factor_cap)), "application/json"};
  }

  HttpResponse patch_leak(Lineage& lineage, const std::string& node, const Json& doc) {
    if (!doc.contains("base") || !doc["base"].is_string()) throw SchemaError("base", "mutations must name their base version");
    if (!doc.contains("leak")) throw SchemaError("leak", "missing required field");
    const Vector leak = vector_from_json(doc["leak"], "leak");

    std::lock_guard write(lineage.write_mutex);
    const Snapshot current = snapshot(lineage, {});
    if (doc["base"].get<std::string>() != current.version) {
      throw HttpFailure{409, Json{{"error", "stale base version"}, {"current", current.version}}};
    }
    const NodeId id(node);
    if (!current.net->contains(id)) fail(404, "unknown node '" + node + "'");
    if (current.net->is_root(id)) fail(422, "node '" + node + "' is a root and has no leak");

    const Network edited = current.net->to_builder().set_leak(id, CumulativeVector(leak)).build();
    if (ValidationReport report = validate_network(edited); !report.valid()) throw ValidationError(std::move(report));
    const NetworkDiff d = diff(*current.net, edited);
    Network next = apply_diff(*current.net, d);
    const std::string version = d.target_version;
    {
      std::unique_lock state(lineage.state_mutex);
      lineage.versions.emplace(version, std::make_shared<const Network>(std::move(next)));
      if (lineage.history.back() != version) lineage.history.push_back(version);
      lineage.current = version;
    }
    return {200, Json{{"version", version}, {"base", current.version}, {"annotation", annotation_json(*current.net, d)}}.dump(),
            "application/json"};
  }

  static Json annotation_json(const Network& base, const NetworkDiff& d) {
    const Annotation a = annotate(base, d);
    Json nodes = Json::object();
    for (const auto& [id, status] : a.nodes) nodes[id.str()] = to_string(status);
    Json arcs = Json::array();
    for (const auto& [arc, status] : a.arcs) {
      arcs.push_back(Json{{"parent", arc.first.str()}, {"child", arc.second.str()}, {"status", to_string(status)}});
    }
    return Json{{"base", d.base_version}, {"target", d.target_version}, {"nodes", nodes}, {"arcs", arcs}};
  }

  HttpResponse diff_versions(const Lineage& lineage, const std::string& v1, const std::string& v2) {
    const Snapshot a = at_version(lineage, v1);
    const Snapshot b = at_version(lineage, v2);
    return {200, annotation_json(*a.net, diff(*a.net, *b.net)).dump(), "application/json"};
  }

  HttpResponse export_network(const Lineage& lineage, const std::map<std::string, std::string>& query) {
    const Snapshot snap = snapshot(lineage, query);
    std::string format = kNetworkFormat;
    if (auto it = query.find("format"); it != query.end()) format = it->second;
    if (format == kNetworkFormat) return {200, save_network(*snap.net), "application/json"};
    if (format == kExpandedFormat || format == "expanded") {
      return {200, export_expanded(*snap.net, options.expansion_cap), "application/json"};
    }
    fail(400, "unknown export format '" + format + "'");
  }

  HttpResponse route(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& query, const std::string& body) {
    const auto seg = split_path(path);
    if (seg.empty() || seg[0] != "networks") fail(404, "no route for " + path);
    if (seg.size() == 1) {
      if (method == "GET") return list();
      if (method == "POST") return upload(body);
      fail(405, "method not allowed");
    }
    auto lineage = find(seg[1]);
    if (seg.size() == 3 && method == "GET" && seg[2] == "graph") return graph(*lineage, query);
    if (seg.size() == 3 && method == "GET" && seg[2] == "export") return export_network(*lineage, query);
    if (seg.size() == 3 && method == "POST" && seg[2] == "view") return view(*lineage, query, body_json(body));
    if (seg.size() == 3 && method == "POST" && seg[2] == "extract") return extract(*lineage, query, body_json(body));
    if (seg.size() == 3 && method == "POST" && seg[2] == "infer") return infer(*lineage, query, body_json(body));
    if (seg.size() == 5 && method == "PATCH" && seg[2] == "nodes" && seg[4] == "leak") {
      return patch_leak(*lineage, seg[3], body_json(body));
    }
    if (seg.size() == 5 && method == "GET" && seg[2] == "diff") return diff_versions(*lineage, seg[3], seg[4]);
    fail(404, "no route for " + method + " " + path);
  }
};

WorkbenchService::WorkbenchService(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    HttpResponse out = handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Patch(".*", handler);
}

WorkbenchService::~WorkbenchService() = default;

HttpResponse WorkbenchService::handle(const std::string& method, const std::string& path,
                                      const std::map<std::string, std::string>& query, const std::string& body) {
  auto error = [](int status, const std::string& message) {
    return HttpResponse{status, Json{{"error", message}}.dump(), "application/json"};
  };
  try {
    return impl_->route(method, path, query, body);
  } catch (const HttpFailure& f) {
    return {f.status, f.body.dump(), "application/json"};
  } catch (const ValidationError& e) {
    Json body = report_to_json(e.report());
    body["error"] = e.what();
    return {422, body.dump(), "application/json"};
  } catch (const ParseError& e) {
    return error(400, e.what());
  } catch (const SchemaError& e) {
    return error(400, e.what());
  } catch (const VersionError& e) {
    return error(409, e.what());
  } catch (const CapacityError& e) {
    return error(507, e.what());
  } catch (const InputError& e) {
    return error(400, e.what());
  } catch (const Error& e) {
    // Empty views, failed extraction, zero-probability evidence.
    return error(422, e.what());
  }
}

int WorkbenchService::bind() {
  const ServiceOptions& o = impl_->options;
  if (o.port == 0) {
    const int port = impl_->server.bind_to_any_port(o.host);
    if (port < 0) throw Error("cannot bind " + o.host);
    return port;
  }
  if (!impl_->server.bind_to_port(o.host, o.port)) throw Error("cannot bind " + o.host + ":" + std::to_string(o.port));
  return o.port;
}

void WorkbenchService::run() { impl_->server.listen_after_bind(); }

void WorkbenchService::stop() { impl_->server.stop(); }

}  // namespace nmx
