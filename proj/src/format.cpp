#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <openssl/evp.h>

#include "nmx/io.hpp"

namespace nmx {

namespace {

// Schema helpers. `field` is a JSON-path-like location used in errors.

void expect_object(const Json& j, const std::string& field) {
  if (!j.is_object()) throw SchemaError(field, "expected an object");
}

void only_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& field) {
  expect_object(j, field);
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw SchemaError(field + "." + key, "unknown field");
    }
  }
}

const Json& require(const Json& j, const char* key, const std::string& field) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(field + "." + key, "missing required field");
  return *it;
}

std::string get_string(const Json& j, const std::string& field) {
  if (!j.is_string()) throw SchemaError(field, "expected a string");
  return j.get<std::string>();
}

double get_number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw SchemaError(field, "expected a number");
  return j.get<double>();
}

std::vector<std::string> get_strings(const Json& j, const std::string& field) {
  if (!j.is_array()) throw SchemaError(field, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_string(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

int parse_state_key(const std::string& key, const std::string& field) {
  if (key.empty() || key.size() > 6 || !std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw SchemaError(field, "expected a decimal parent state index");
  }
  return std::stoi(key);
}

void check_format(const Json& doc, const char* format) {
  expect_object(doc, "$");
  if (get_string(require(doc, "format", "$"), "$.format") != format) {
    throw SchemaError("$.format", std::string("expected \"") + format + "\"");
  }
  const Json& version = require(doc, "version", "$");
  if (!version.is_number_integer() || version.get<int>() != Network::kFormatVersion) {
    throw SchemaError("$.version", "unsupported format version");
  }
}

Json family_to_json(const NoisyMaxFamily& fam) {
  Json activation = Json::object();
  for (std::size_t i = 0; i < fam.parents.size(); ++i) {
    Json curves = Json::object();
    for (std::size_t d = 0; d < fam.activation[i].size(); ++d) {
      curves[std::to_string(d + 1)] = vector_to_json(fam.activation[i][d].values);
    }
    activation[fam.parents[i].str()] = std::move(curves);
  }
  Json parents = Json::array();
  for (const auto& p : fam.parents) parents.push_back(p.str());
  return Json{{"parents", parents}, {"activation", activation}, {"leak", vector_to_json(fam.leak.values)}};
}

NoisyMaxFamily family_from_json(const Json& j, const NodeId& child, const std::string& field) {
  only_keys(j, {"parents", "activation", "leak"}, field);
  NoisyMaxFamily fam;
  fam.child = child;
  for (const auto& p : get_strings(require(j, "parents", field), field + ".parents")) fam.parents.emplace_back(p);

  const Json& activation = require(j, "activation", field);
  const std::string afield = field + ".activation";
  expect_object(activation, afield);
  for (const auto& [key, value] : activation.items()) {
    if (std::find(fam.parents.begin(), fam.parents.end(), NodeId(key)) == fam.parents.end()) {
      throw SchemaError(afield + "." + key, "activation given for a node that is not a parent");
    }
  }
  for (const auto& p : fam.parents) {
    const std::string pfield = afield + "." + p.str();
    const Json& curves = require(activation, p.str().c_str(), afield);
    expect_object(curves, pfield);
    std::map<int, CumulativeVector> by_state;
    for (const auto& [key, value] : curves.items()) {
      const int state = parse_state_key(key, pfield + "." + key);
      by_state[state] = CumulativeVector(vector_from_json(value, pfield + "." + key));
    }
    std::vector<CumulativeVector> list;
    int expected = 1;
    for (auto& [state, curve] : by_state) {
      if (state != expected++) throw SchemaError(pfield, "parent states must be 1..n without gaps");
      list.push_back(std::move(curve));
    }
    fam.activation.push_back(std::move(list));
  }
  fam.leak = CumulativeVector(vector_from_json(require(j, "leak", field), field + ".leak"));
  return fam;
}

}  // namespace

Json provenance_to_json(const Provenance& prov) {
  Json folds = Json::object();
  for (const auto& [child, records] : prov.folds) {
    Json list = Json::array();
    for (const auto& r : records) list.push_back({{"parent", r.parent.str()}, {"marginal", vector_to_json(r.marginal)}});
    folds[child.str()] = std::move(list);
  }
  return Json{{"source_version", prov.source_version},
              {"policy", prov.policy},
              {"view", prov.view ? view_to_json(*prov.view) : Json(nullptr)},
              {"folds", folds}};
}

Provenance provenance_from_json(const Json& j, const std::string& field) {
  only_keys(j, {"source_version", "policy", "view", "folds"}, field);
  Provenance prov;
  prov.source_version = get_string(require(j, "source_version", field), field + ".source_version");
  prov.policy = get_string(require(j, "policy", field), field + ".policy");
  if (const Json& view = require(j, "view", field); !view.is_null()) prov.view = view_from_json(view);
  const Json& folds = require(j, "folds", field);
  expect_object(folds, field + ".folds");
  for (const auto& [child, list] : folds.items()) {
    const std::string cfield = field + ".folds." + child;
    if (!list.is_array()) throw SchemaError(cfield, "expected an array");
    auto& records = prov.folds[NodeId(child)];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string rfield = cfield + "[" + std::to_string(i) + "]";
      only_keys(list[i], {"parent", "marginal"}, rfield);
      records.push_back({NodeId(get_string(require(list[i], "parent", rfield), rfield + ".parent")),
                         vector_from_json(require(list[i], "marginal", rfield), rfield + ".marginal")});
    }
  }
  return prov;
}

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  // nlohmann reports a 1-based byte position of the offending character.
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  std::size_t line = 1;
  std::size_t line_start = 0;
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      line_start = i + 1;
    }
  }
  return {line, end - line_start + 1};
}

}  // namespace

// ---------------------------------------------------------------------------

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const Json& doc, const std::string& field) {
  if (!doc.is_array()) throw SchemaError(field, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = get_number(doc[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    auto [line, column] = line_column(text, e.byte);
    std::string what = e.what();
    // Drop nlohmann's "[json.exception.parse_error.101] parse error at line x, column y: " prefix.
    if (auto pos = what.find(": "); pos != std::string::npos) what = what.substr(pos + 2);
    throw ParseError("parse error: " + what, line, column);
  }
}

std::string canonical_dump(const Json& doc) { return doc.dump(2) + "\n"; }

Json node_to_json(const Network& net, const NodeId& id) {
  const Node& node = net.node(id);
  Json j{{"id", id.str()}, {"name", node.name}, {"domain", node.domain.states}, {"labels", Json::array()}};
  for (const auto& label : node.labels) j["labels"].push_back(label);
  if (auto it = net.roots().find(id); it != net.roots().end()) j["prior"] = vector_to_json(it->second.probabilities);
  if (auto it = net.families().find(id); it != net.families().end()) j["family"] = family_to_json(it->second);
  return j;
}

void node_from_json(const Json& payload, NetworkBuilder& builder, const std::string& field) {
  only_keys(payload, {"id", "name", "domain", "labels", "prior", "family"}, field);
  Node node;
  node.id = NodeId(get_string(require(payload, "id", field), field + ".id"));
  node.name = get_string(require(payload, "name", field), field + ".name");
  node.domain = OrderedDomain(get_strings(require(payload, "domain", field), field + ".domain"));
  for (auto& label : get_strings(require(payload, "labels", field), field + ".labels")) node.labels.insert(label);

  const bool has_prior = payload.contains("prior");
  const bool has_family = payload.contains("family");
  if (has_prior == has_family) throw SchemaError(field, "node needs exactly one of \"prior\" or \"family\"");
  if (has_prior) {
    builder.add_root(std::move(node), vector_from_json(payload["prior"], field + ".prior"));
  } else {
    NodeId id = node.id;
    builder.add_child(std::move(node), family_from_json(payload["family"], id, field + ".family"));
  }
}

Json view_to_json(const ViewSpec& view) {
  Json seeds = Json::array();
  for (const auto& s : view.seeds) seeds.push_back(s.str());
  Json labels = nullptr;
  if (view.label_filter) {
    labels = Json::array();
    for (const auto& l : *view.label_filter) labels.push_back(l);
  }
  return Json{{"seeds", seeds},
              {"relation", to_string(view.relation)},
              {"labels", labels},
              {"include_seeds", view.include_seeds}};
}

ViewSpec view_from_json(const Json& doc) {
  const std::string field = "view";
  only_keys(doc, {"seeds", "relation", "labels", "include_seeds"}, field);
  ViewSpec view;
  for (const auto& s : get_strings(require(doc, "seeds", field), field + ".seeds")) view.seeds.insert(NodeId(s));
  if (view.seeds.empty()) throw SchemaError(field + ".seeds", "at least one seed is required");
  try {
    view.relation = parse_relation(get_string(require(doc, "relation", field), field + ".relation"));
  } catch (const InputError& e) {
    throw SchemaError(field + ".relation", e.what());
  }
  if (auto it = doc.find("labels"); it != doc.end() && !it->is_null()) {
    auto labels = get_strings(*it, field + ".labels");
    view.label_filter = std::set<std::string>(labels.begin(), labels.end());
  }
  if (auto it = doc.find("include_seeds"); it != doc.end()) {
    if (!it->is_boolean()) throw SchemaError(field + ".include_seeds", "expected a boolean");
    view.include_seeds = it->get<bool>();
  }
  return view;
}

Json marginals_to_json(const MarginalTable& marginals) {
  Json out = Json::object();
  for (const auto& [id, v] : marginals) out[id.str()] = vector_to_json(v);
  return out;
}

Json report_to_json(const ValidationReport& report) {
  auto list = [](const std::vector<Violation>& items) {
    Json out = Json::array();
    for (const auto& v : items) {
      Json j{{"code", v.code}, {"message", v.message}, {"node", v.node.str()}};
      if (v.parent) j["parent"] = v.parent->str();
      if (v.state) j["state"] = *v.state;
      out.push_back(std::move(j));
    }
    return out;
  };
  return Json{{"valid", report.valid()}, {"violations", list(report.violations)}, {"warnings", list(report.warnings)}};
}

Json network_to_json(const Network& net) {
  Json nodes = Json::array();
  for (const auto& [id, node] : net.nodes()) nodes.push_back(node_to_json(net, id));
  return Json{{"format", kNetworkFormat},
              {"version", net.format_version()},
              {"title", net.title()},
              {"nodes", nodes},
              {"provenance", net.provenance() ? provenance_to_json(*net.provenance()) : Json(nullptr)}};
}

Network network_from_json(const Json& doc) {
  check_format(doc, kNetworkFormat);
  only_keys(doc, {"format", "version", "title", "nodes", "provenance"}, "$");
  NetworkBuilder builder;
  builder.title(get_string(require(doc, "title", "$"), "$.title"));
  const Json& nodes = require(doc, "nodes", "$");
  if (!nodes.is_array()) throw SchemaError("$.nodes", "expected an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string field = "$.nodes[" + std::to_string(i) + "]";
    node_from_json(nodes[i], builder, field);
    if (!seen.insert(nodes[i]["id"].get<std::string>()).second) throw SchemaError(field + ".id", "duplicate node id");
  }
  if (auto it = doc.find("provenance"); it != doc.end() && !it->is_null()) {
    builder.provenance(provenance_from_json(*it, "$.provenance"));
  }
  return builder.build();
}

std::string save_network(const Network& net) { return canonical_dump(network_to_json(net)); }

Network load_network(std::string_view text) {
  Network net = network_from_json(parse_json(text));
  ValidationReport report = validate_network(net);
  if (!report.valid()) throw ValidationError(std::move(report));
  return net;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string version_id(const Network& net) { return sha256_hex(save_network(net)); }

// ---------------------------------------------------------------------------
// Expanded export

std::string export_expanded(const Network& net, std::size_t cap) {
  Json nodes = Json::array();
  for (const auto& id : topological_order(net)) {
    const Node& node = net.node(id);
    Json parents = Json::array();
    Json table = Json::array();
    if (net.is_root(id)) {
      table.push_back(vector_to_json(net.prior(id).probabilities));
    } else {
      const NoisyMaxFamily& fam = net.family(id);
      for (const auto& p : fam.parents) parents.push_back(p.str());
      const Cpt cpt = expand_cpt(fam, cap);
      for (std::size_t j = 0; j < cpt.columns(); ++j) {
        Json column = Json::array();
        for (int x = 0; x < cpt.child_size; ++x) column.push_back(cpt(j, x));
        table.push_back(std::move(column));
      }
    }
    nodes.push_back(Json{{"id", id.str()},
                         {"name", node.name},
                         {"domain", node.domain.states},
                         {"parents", parents},
                         {"table", table}});
  }
  // Nodes listed in topological order so single-pass importers work.
  return canonical_dump(Json{{"format", kExpandedFormat},
                             {"version", Network::kFormatVersion},
                             {"title", net.title()},
                             {"column_order", "first parent most significant"},
                             {"nodes", nodes}});
}

TableNetwork load_expanded(std::string_view text) {
  const Json doc = parse_json(text);
  check_format(doc, kExpandedFormat);
  only_keys(doc, {"format", "version", "title", "column_order", "nodes"}, "$");
  TableNetwork out;
  out.title = get_string(require(doc, "title", "$"), "$.title");
  const Json& nodes = require(doc, "nodes", "$");
  if (!nodes.is_array()) throw SchemaError("$.nodes", "expected an array");

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string field = "$.nodes[" + std::to_string(i) + "]";
    only_keys(nodes[i], {"id", "name", "domain", "parents", "table"}, field);
    TableNode tn;
    tn.id = NodeId(get_string(require(nodes[i], "id", field), field + ".id"));
    tn.domain = OrderedDomain(get_strings(require(nodes[i], "domain", field), field + ".domain"));
    for (const auto& p : get_strings(require(nodes[i], "parents", field), field + ".parents")) tn.parents.emplace_back(p);
    if (out.nodes.count(tn.id)) throw SchemaError(field + ".id", "duplicate node id");
    out.nodes.emplace(tn.id, std::move(tn));
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string field = "$.nodes[" + std::to_string(i) + "]";
    TableNode& tn = out.nodes.at(NodeId(nodes[i]["id"].get<std::string>()));
    tn.cpt.child_size = tn.domain.size();
    if (tn.cpt.child_size < 1) throw SchemaError(field + ".domain", "domain must not be empty");
    for (const auto& p : tn.parents) {
      auto it = out.nodes.find(p);
      if (it == out.nodes.end()) throw SchemaError(field + ".parents", "unknown parent '" + p.str() + "'");
      tn.cpt.parent_sizes.push_back(it->second.domain.size());
    }
    const Json& table = require(nodes[i], "table", field);
    if (!table.is_array() || table.size() != tn.cpt.columns()) {
      throw SchemaError(field + ".table", "expected " + std::to_string(tn.cpt.columns()) + " columns");
    }
    tn.cpt.table.resize(static_cast<Eigen::Index>(tn.cpt.columns()) * tn.cpt.child_size);
    for (std::size_t j = 0; j < table.size(); ++j) {
      const std::string cfield = field + ".table[" + std::to_string(j) + "]";
      const Vector column = vector_from_json(table[j], cfield);
      if (column.size() != tn.cpt.child_size) throw SchemaError(cfield, "column length must equal domain size");
      if ((column.array() < 0.0).any() || (column.array() > 1.0).any() || std::abs(column.sum() - 1.0) > 1e-9) {
        throw SchemaError(cfield, "column must be a probability distribution");
      }
      tn.cpt.table.segment(static_cast<Eigen::Index>(j) * tn.cpt.child_size, tn.cpt.child_size) = column.array();
    }
  }
  out.topological_order();
  return out;
}

// ---------------------------------------------------------------------------

Evidence parse_evidence(const Network& net, const std::map<std::string, std::string>& assignments) {
  Evidence evidence;
  for (const auto& [key, value] : assignments) {
    const Node& node = net.node(NodeId(key));
    if (auto idx = node.domain.index_of(value)) {
      evidence.assignments[node.id] = *idx;
      continue;
    }
    if (!value.empty() && std::all_of(value.begin(), value.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        value.size() < 7) {
      evidence.assignments[node.id] = std::stoi(value);
      continue;
    }
    throw InputError("node '" + key + "' has no state '" + value + "'");
  }
  check_evidence(net, evidence);
  return evidence;
}

Json inference_report(const Network& net, const Evidence& evidence, const std::set<NodeId>& query,
                      std::size_t factor_cap) {
  std::set<NodeId> targets = query;
  if (targets.empty()) {
    for (const auto& [id, node] : net.nodes()) targets.insert(id);
  }
  return Json{{"version", version_id(net)}, {"marginals", marginals_to_json(eliminate(net, evidence, targets, factor_cap))}};
}

}  // namespace nmx
