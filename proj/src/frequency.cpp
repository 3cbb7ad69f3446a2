#include <set>

#include "nmx/generator.hpp"
#include "nmx/io.hpp"

namespace nmx {

namespace {

constexpr int kMaxWeight = 5;

int weight_key(const std::string& key) {
  if (key.size() != 1 || key[0] < '0' || key[0] > '0' + kMaxWeight) {
    throw InputError("frequency weight '" + key + "' outside 0.." + std::to_string(kMaxWeight));
  }
  return key[0] - '0';
}

}  // namespace

FrequencyMap FrequencyMap::defaults() { return FrequencyMap{{{0, 0.0}, {1, 0.02}, {2, 0.1}, {3, 0.35}, {4, 0.7}, {5, 0.95}}}; }

void FrequencyMap::check() const {
  auto zero = probability.find(0);
  if (zero == probability.end() || zero->second != 0.0) throw InputError("frequency weight 0 must map to 0");
  double previous = 0.0;
  for (const auto& [weight, p] : probability) {
    if (weight < 0 || weight > kMaxWeight) throw InputError("frequency weight " + std::to_string(weight) + " out of range");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("frequency map probability outside [0,1]");
    if (p < previous) throw InputError("frequency map must be monotone nondecreasing");
    previous = p;
  }
}

double FrequencyMap::operator()(int weight) const {
  if (weight < 0 || weight > kMaxWeight) {
    throw InputError("frequency weight " + std::to_string(weight) + " outside 0.." + std::to_string(kMaxWeight));
  }
  auto it = probability.find(weight);
  if (it == probability.end()) throw InputError("unmapped frequency weight " + std::to_string(weight));
  return it->second;
}

FrequencyMap load_frequency_map(std::string_view text) {
  const Json doc = parse_json(text);
  if (!doc.is_object()) throw SchemaError("$", "expected an object of weight -> probability");
  FrequencyMap fmap;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number()) throw SchemaError("$." + key, "expected a number");
    fmap.probability[weight_key(key)] = value.get<double>();
  }
  fmap.check();
  return fmap;
}

Network import_frequencies(std::string_view structure_doc, const FrequencyMap& fmap) {
  fmap.check();
  const Json doc = parse_json(structure_doc);
  if (!doc.is_object() || doc.value("format", "") != "nmx-structure") {
    throw SchemaError("$.format", "expected \"nmx-structure\"");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != "format" && key != "version" && key != "title" && key != "nodes" && key != "arcs") {
      throw SchemaError("$." + key, "unknown field");
    }
  }
  if (doc.value("version", 0) != 1) throw SchemaError("$.version", "unsupported format version");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw SchemaError("$.nodes", "expected an array");
  if (!doc.contains("arcs") || !doc["arcs"].is_array()) throw SchemaError("$.arcs", "expected an array");

  struct Declared {
    Node node;
    std::optional<Vector> prior;
    std::optional<Vector> leak;
  };
  std::map<NodeId, Declared> declared;
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const Json& j = doc["nodes"][i];
    const std::string field = "$.nodes[" + std::to_string(i) + "]";
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) throw SchemaError(field + ".id", "expected a string");
    for (const auto& [key, value] : j.items()) {
      if (key != "id" && key != "name" && key != "domain" && key != "labels" && key != "prior" && key != "leak") {
        throw SchemaError(field + "." + key, "unknown field");
      }
    }
    Declared d;
    d.node.id = NodeId(j["id"].get<std::string>());
    d.node.name = j.value("name", d.node.id.str());
    if (!j.contains("domain") || !j["domain"].is_array()) throw SchemaError(field + ".domain", "expected an array");
    for (const auto& s : j["domain"]) {
      if (!s.is_string()) throw SchemaError(field + ".domain", "expected state names");
      d.node.domain.states.push_back(s.get<std::string>());
    }
    if (d.node.domain.size() < 2) throw SchemaError(field + ".domain", "domain must have at least 2 states");
    if (j.contains("labels")) {
      for (const auto& l : j["labels"]) {
        if (!l.is_string()) throw SchemaError(field + ".labels", "expected strings");
        d.node.labels.insert(l.get<std::string>());
      }
    }
    if (j.contains("prior")) d.prior = vector_from_json(j["prior"], field + ".prior");
    if (j.contains("leak")) d.leak = vector_from_json(j["leak"], field + ".leak");
    if (!declared.emplace(d.node.id, d).second) throw SchemaError(field + ".id", "duplicate node id");
  }

  std::map<NodeId, std::vector<std::pair<NodeId, double>>> incoming;
  for (std::size_t i = 0; i < doc["arcs"].size(); ++i) {
    const Json& a = doc["arcs"][i];
    const std::string field = "$.arcs[" + std::to_string(i) + "]";
    if (!a.is_object() || !a.contains("parent") || !a.contains("child") || !a.contains("weight") ||
        !a["parent"].is_string() || !a["child"].is_string() || !a["weight"].is_number_integer()) {
      throw SchemaError(field, "expected {parent, child, weight:int}");
    }
    const NodeId parent(a["parent"].get<std::string>());
    const NodeId child(a["child"].get<std::string>());
    if (!declared.count(parent) || !declared.count(child)) throw SchemaError(field, "arc references an undeclared node");
    incoming[child].emplace_back(parent, fmap(a["weight"].get<int>()));
  }

  NetworkBuilder builder;
  builder.title(doc.value("title", ""));
  for (auto& [id, d] : declared) {
    const int s = d.node.domain.size();
    auto arcs = incoming.find(id);
    if (d.prior) {
      if (arcs != incoming.end()) throw SchemaError("$.nodes", "node '" + id.str() + "' has a prior and incoming arcs");
      builder.add_root(d.node, *d.prior);
      continue;
    }
    NoisyMaxFamily fam;
    fam.child = id;
    if (arcs != incoming.end()) {
      for (const auto& [parent, p] : arcs->second) {
        // Step curve: the same p at every parent state >= 1 and child threshold.
        Vector step = Vector::Constant(s, 1.0 - p);
        step[s - 1] = 1.0;
        fam.parents.push_back(parent);
        fam.activation.emplace_back(static_cast<std::size_t>(declared.at(parent).node.domain.size() - 1),
                                    CumulativeVector(step));
      }
    }
    fam.leak = d.leak ? CumulativeVector(*d.leak) : CumulativeVector::ones(s);
    builder.add_child(d.node, std::move(fam));
  }
  return builder.build_validated();
}

}  // namespace nmx
