#include "nmx/versioning.hpp"

#include <algorithm>
#include <set>

#include "nmx/io.hpp"

namespace nmx {

namespace {

bool same_optional_vector(const std::optional<Vector>& a, const std::optional<Vector>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->size() == b->size() && (a->size() == 0 || *a == *b);
}

void put_record(NetworkBuilder& builder, const NodeRecord& rec) {
  if (rec.family) {
    builder.add_child(rec.node, *rec.family);
  } else {
    builder.add_root(rec.node, rec.prior.value_or(Vector{}));
  }
}

Json record_to_json(const NodeRecord& rec) {
  NetworkBuilder builder;
  put_record(builder, rec);
  return node_to_json(builder.build(), rec.node.id);
}

NodeRecord record_from_json(const Json& payload, const std::string& field) {
  NetworkBuilder builder;
  node_from_json(payload, builder, field);
  const Network one = builder.build();
  return NodeRecord::of(one, one.nodes().begin()->first);
}

Json arcs_to_json(const std::vector<Arc>& arcs) {
  Json out = Json::array();
  for (const auto& [p, c] : arcs) out.push_back(Json::array({p.str(), c.str()}));
  return out;
}

std::vector<Arc> arcs_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) throw SchemaError(field, "expected an array of [parent, child] pairs");
  std::vector<Arc> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& pair = j[i];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
      throw SchemaError(field + "[" + std::to_string(i) + "]", "expected [parent, child]");
    }
    out.emplace_back(NodeId(pair[0].get<std::string>()), NodeId(pair[1].get<std::string>()));
  }
  return out;
}

Json metadata_side(const std::string& title, const std::optional<Provenance>& prov) {
  return Json{{"title", title}, {"provenance", prov ? provenance_to_json(*prov) : Json(nullptr)}};
}

void read_metadata_side(const Json& j, const std::string& field, std::string& title, std::optional<Provenance>& prov) {
  if (!j.is_object() || !j.contains("title") || !j.contains("provenance") || !j["title"].is_string()) {
    throw SchemaError(field, "expected {title, provenance}");
  }
  title = j["title"].get<std::string>();
  prov.reset();
  if (!j["provenance"].is_null()) prov = provenance_from_json(j["provenance"], field + ".provenance");
}

}  // namespace

NodeRecord NodeRecord::of(const Network& net, const NodeId& id) {
  NodeRecord rec{net.node(id), std::nullopt, std::nullopt};
  if (net.is_root(id)) rec.prior = net.prior(id).probabilities;
  if (auto it = net.families().find(id); it != net.families().end()) rec.family = it->second;
  return rec;
}

bool operator==(const NodeRecord& a, const NodeRecord& b) {
  return a.node == b.node && same_optional_vector(a.prior, b.prior) && a.family == b.family;
}

bool NetworkDiff::empty() const {
  return nodes_added.empty() && nodes_removed.empty() && arcs_added.empty() && arcs_removed.empty() &&
         parameter_changes.empty() && !metadata;
}

NetworkDiff diff(const Network& a, const Network& b) {
  NetworkDiff d;
  d.base_version = version_id(a);
  d.target_version = version_id(b);

  for (const auto& [id, node] : b.nodes()) {
    if (!a.contains(id)) d.nodes_added.push_back(NodeRecord::of(b, id));
  }
  for (const auto& [id, node] : a.nodes()) {
    if (!b.contains(id)) {
      d.nodes_removed.push_back(NodeRecord::of(a, id));
      continue;
    }
    NodeRecord before = NodeRecord::of(a, id);
    NodeRecord after = NodeRecord::of(b, id);
    if (!(before == after)) d.parameter_changes.push_back({id, std::move(before), std::move(after)});
  }

  const auto arcs_a = a.arcs();
  const auto arcs_b = b.arcs();
  std::set_difference(arcs_b.begin(), arcs_b.end(), arcs_a.begin(), arcs_a.end(), std::back_inserter(d.arcs_added));
  std::set_difference(arcs_a.begin(), arcs_a.end(), arcs_b.begin(), arcs_b.end(), std::back_inserter(d.arcs_removed));

  if (a.title() != b.title() || a.provenance() != b.provenance()) {
    d.metadata = MetadataChange{a.title(), b.title(), a.provenance(), b.provenance()};
  }
  return d;
}

Network apply_diff(const Network& net, const NetworkDiff& d) {
  if (version_id(net) != d.base_version) throw VersionError("network is not the base version of this diff");

  NetworkBuilder builder(net);
  for (const auto& rec : d.nodes_removed) {
    if (!net.contains(rec.node.id) || !(NodeRecord::of(net, rec.node.id) == rec)) {
      throw VersionError("removed node '" + rec.node.id.str() + "' does not match the base");
    }
    builder.remove_node(rec.node.id);
  }
  for (const auto& rec : d.nodes_added) {
    if (net.contains(rec.node.id)) throw VersionError("added node '" + rec.node.id.str() + "' already exists");
    put_record(builder, rec);
  }
  for (const auto& change : d.parameter_changes) {
    if (!net.contains(change.node) || !(NodeRecord::of(net, change.node) == change.before)) {
      throw VersionError("changed node '" + change.node.str() + "' does not match the base");
    }
    builder.remove_node(change.node);
    put_record(builder, change.after);
  }
  if (d.metadata) {
    if (net.title() != d.metadata->title_before || net.provenance() != d.metadata->provenance_before) {
      throw VersionError("metadata does not match the base");
    }
    builder.title(d.metadata->title_after);
    builder.provenance(d.metadata->provenance_after);
  }

  Network result = builder.build();
  ValidationReport report = validate_network(result);
  if (!report.valid()) throw ValidationError(std::move(report));

  // Arc lists must agree with the node payloads.
  std::set<Arc> expected;
  for (const auto& arc : net.arcs()) expected.insert(arc);
  for (const auto& arc : d.arcs_removed) expected.erase(arc);
  expected.insert(d.arcs_added.begin(), d.arcs_added.end());
  const auto arcs = result.arcs();
  if (!std::equal(arcs.begin(), arcs.end(), expected.begin(), expected.end())) {
    throw VersionError("arc changes disagree with the node payloads");
  }
  if (version_id(result) != d.target_version) throw VersionError("result does not match the diff's target version");
  return result;
}

NetworkDiff invert(const NetworkDiff& d) {
  NetworkDiff inv;
  inv.base_version = d.target_version;
  inv.target_version = d.base_version;
  inv.nodes_added = d.nodes_removed;
  inv.nodes_removed = d.nodes_added;
  inv.arcs_added = d.arcs_removed;
  inv.arcs_removed = d.arcs_added;
  for (const auto& c : d.parameter_changes) inv.parameter_changes.push_back({c.node, c.after, c.before});
  if (d.metadata) {
    inv.metadata = MetadataChange{d.metadata->title_after, d.metadata->title_before, d.metadata->provenance_after,
                                  d.metadata->provenance_before};
  }
  return inv;
}

std::string to_string(ChangeStatus status) {
  switch (status) {
    case ChangeStatus::added: return "added";
    case ChangeStatus::removed: return "removed";
    case ChangeStatus::changed: return "changed";
    case ChangeStatus::unchanged: return "unchanged";
  }
  return "unknown";
}

Annotation annotate(const Network& net, const NetworkDiff& d) {
  Annotation out;
  for (const auto& [id, node] : net.nodes()) out.nodes[id] = ChangeStatus::unchanged;
  for (const auto& arc : net.arcs()) out.arcs[arc] = ChangeStatus::unchanged;
  for (const auto& c : d.parameter_changes) out.nodes[c.node] = ChangeStatus::changed;
  for (const auto& rec : d.nodes_added) out.nodes[rec.node.id] = ChangeStatus::added;
  for (const auto& rec : d.nodes_removed) out.nodes[rec.node.id] = ChangeStatus::removed;
  for (const auto& arc : d.arcs_added) out.arcs[arc] = ChangeStatus::added;
  for (const auto& arc : d.arcs_removed) out.arcs[arc] = ChangeStatus::removed;
  return out;
}

std::string save_diff(const NetworkDiff& d) {
  auto records = [](const std::vector<NodeRecord>& list) {
    Json out = Json::array();
    for (const auto& rec : list) out.push_back(record_to_json(rec));
    return out;
  };
  Json changes = Json::array();
  for (const auto& c : d.parameter_changes) {
    changes.push_back(Json{{"node", c.node.str()}, {"old", record_to_json(c.before)}, {"new", record_to_json(c.after)}});
  }
  Json metadata = nullptr;
  if (d.metadata) {
    metadata = Json{{"old", metadata_side(d.metadata->title_before, d.metadata->provenance_before)},
                    {"new", metadata_side(d.metadata->title_after, d.metadata->provenance_after)}};
  }
  return canonical_dump(Json{{"format", kDiffFormat},
                             {"version", 1},
                             {"base", d.base_version},
                             {"target", d.target_version},
                             {"nodes_added", records(d.nodes_added)},
                             {"nodes_removed", records(d.nodes_removed)},
                             {"arcs_added", arcs_to_json(d.arcs_added)},
                             {"arcs_removed", arcs_to_json(d.arcs_removed)},
                             {"parameter_changes", changes},
                             {"metadata", metadata}});
}

NetworkDiff load_diff(std::string_view text) {
  const Json doc = parse_json(text);
  if (!doc.is_object()) throw SchemaError("$", "expected an object");
  static const std::set<std::string> kKeys{"format",       "version",      "base",
                                           "target",       "nodes_added",  "nodes_removed",
                                           "arcs_added",   "arcs_removed", "parameter_changes",
                                           "metadata"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) throw SchemaError("$." + key, "unknown field");
  }
  for (const auto& key : kKeys) {
    if (!doc.contains(key)) throw SchemaError("$." + key, "missing required field");
  }
  if (doc["format"] != kDiffFormat) throw SchemaError("$.format", std::string("expected \"") + kDiffFormat + "\"");
  if (doc["version"] != 1) throw SchemaError("$.version", "unsupported format version");
  if (!doc["base"].is_string() || !doc["target"].is_string()) throw SchemaError("$.base", "expected version strings");

  NetworkDiff d;
  d.base_version = doc["base"].get<std::string>();
  d.target_version = doc["target"].get<std::string>();
  auto records = [](const Json& list, const std::string& field) {
    if (!list.is_array()) throw SchemaError(field, "expected an array");
    std::vector<NodeRecord> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
      out.push_back(record_from_json(list[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
  };
  d.nodes_added = records(doc["nodes_added"], "$.nodes_added");
  d.nodes_removed = records(doc["nodes_removed"], "$.nodes_removed");
  d.arcs_added = arcs_from_json(doc["arcs_added"], "$.arcs_added");
  d.arcs_removed = arcs_from_json(doc["arcs_removed"], "$.arcs_removed");

  const Json& changes = doc["parameter_changes"];
  if (!changes.is_array()) throw SchemaError("$.parameter_changes", "expected an array");
  for (std::size_t i = 0; i < changes.size(); ++i) {
    const std::string field = "$.parameter_changes[" + std::to_string(i) + "]";
    const Json& c = changes[i];
    if (!c.is_object() || !c.contains("node") || !c.contains("old") || !c.contains("new") || !c["node"].is_string()) {
      throw SchemaError(field, "expected {node, old, new}");
    }
    d.parameter_changes.push_back({NodeId(c["node"].get<std::string>()), record_from_json(c["old"], field + ".old"),
                                   record_from_json(c["new"], field + ".new")});
  }
  if (const Json& m = doc["metadata"]; !m.is_null()) {
    if (!m.is_object() || !m.contains("old") || !m.contains("new")) throw SchemaError("$.metadata", "expected {old, new}");
    MetadataChange change;
    read_metadata_side(m["old"], "$.metadata.old", change.title_before, change.provenance_before);
    read_metadata_side(m["new"], "$.metadata.new", change.title_after, change.provenance_after);
    d.metadata = std::move(change);
  }
  return d;
}

}  // namespace nmx
