#include "nmx/subnet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nmx/io.hpp"
#include "nmx/noisymax.hpp"

namespace nmx {

namespace {

std::set<NodeId> walk(const Network& net, const std::set<NodeId>& from, bool up) {
  std::set<NodeId> seen;
  std::vector<NodeId> stack(from.begin(), from.end());
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    for (const auto& next : up ? net.parents(id) : net.children(id)) {
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  return seen;
}

Vector difference(const Vector& cumulative) {
  Vector pmf(cumulative.size());
  for (Eigen::Index x = 0; x < cumulative.size(); ++x) {
    pmf[x] = detail::clamp_probability(x == 0 ? cumulative[0] : cumulative[x] - cumulative[x - 1]);
  }
  return pmf;
}

// Marginals of removed parents under the root-prior policy.
class RootPriorMarginals {
 public:
  RootPriorMarginals(const Network& net, const std::set<NodeId>& retained) : net_(net), retained_(retained) {}

  Vector of(const NodeId& removed_parent) {
    try {
      return compute(removed_parent);
    } catch (const ExtractionError& e) {
      throw ExtractionError("cannot fold removed parent '" + removed_parent.str() + "' under root-prior policy: " +
                            e.what());
    }
  }

 private:
  Vector compute(const NodeId& id) {
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
    Vector marginal;
    if (net_.is_root(id)) {
      marginal = net_.prior(id).probabilities;
    } else {
      std::map<NodeId, Vector> parent_marginals;
      for (const auto& p : net_.parents(id)) {
        if (retained_.count(p)) throw ExtractionError("its ancestor '" + p.str() + "' is retained");
        parent_marginals[p] = compute(p);
      }
      marginal = difference(marginal_cumulative(net_.family(id), parent_marginals).values);
    }
    memo_[id] = marginal;
    return marginal;
  }

  const Network& net_;
  const std::set<NodeId>& retained_;
  std::map<NodeId, Vector> memo_;
};

std::optional<int> declared_level(const Node& node) {
  static const std::string kPrefix = "level:";
  for (const auto& label : node.labels) {
    if (label.rfind(kPrefix, 0) != 0) continue;
    const std::string digits = label.substr(kPrefix.size());
    if (!digits.empty() && digits.size() < 7 &&
        std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::stoi(digits);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(MarginalPolicy policy) {
  return policy == MarginalPolicy::exact ? "exact" : "root-prior";
}

MarginalPolicy parse_policy(const std::string& name) {
  if (name == "root-prior") return MarginalPolicy::root_prior;
  if (name == "exact") return MarginalPolicy::exact;
  throw InputError("unknown marginal policy '" + name + "' (expected root-prior or exact)");
}

std::set<NodeId> select_view(const Network& net, const ViewSpec& view) {
  if (view.seeds.empty()) throw InputError("view needs at least one seed");
  for (const auto& s : view.seeds) {
    if (!net.contains(s)) throw InputError("unknown seed '" + s.str() + "'");
  }

  std::set<NodeId> closure;
  auto add_all = [&](const auto& ids) { closure.insert(ids.begin(), ids.end()); };
  switch (view.relation) {
    case Relation::ancestors:
      add_all(walk(net, view.seeds, true));
      break;
    case Relation::descendants:
      add_all(walk(net, view.seeds, false));
      break;
    case Relation::predecessors_and_successors:
      add_all(walk(net, view.seeds, true));
      add_all(walk(net, view.seeds, false));
      break;
    case Relation::immediate_predecessors:
      for (const auto& s : view.seeds) add_all(net.parents(s));
      break;
    case Relation::immediate_successors:
      for (const auto& s : view.seeds) add_all(net.children(s));
      break;
    case Relation::markov_blanket:
      for (const auto& s : view.seeds) {
        add_all(net.parents(s));
        for (const auto& kid : net.children(s)) {
          closure.insert(kid);
          add_all(net.parents(kid));
        }
      }
      break;
  }

  if (view.label_filter) {
    std::erase_if(closure, [&](const NodeId& id) {
      const auto& labels = net.node(id).labels;
      return std::none_of(labels.begin(), labels.end(),
                          [&](const std::string& l) { return view.label_filter->count(l) > 0; });
    });
  }
  if (view.include_seeds) {
    closure.insert(view.seeds.begin(), view.seeds.end());
  } else {
    for (const auto& s : view.seeds) closure.erase(s);
  }
  if (closure.empty()) throw EmptyViewError("view selects no nodes");
  return closure;
}

CumulativeVector fold_leak(const NoisyMaxFamily& family, const std::set<NodeId>& removed,
                           const std::map<NodeId, Vector>& removed_marginals) {
  for (const auto& r : removed) {
    if (std::find(family.parents.begin(), family.parents.end(), r) == family.parents.end()) {
      throw InputError("'" + r.str() + "' is not a parent of '" + family.child.str() + "'");
    }
  }
  Eigen::ArrayXd leak = family.leak.values.array();
  for (std::size_t i = 0; i < family.parents.size(); ++i) {
    if (!removed.count(family.parents[i])) continue;
    auto it = removed_marginals.find(family.parents[i]);
    if (it == removed_marginals.end()) {
      throw InputError("missing marginal for removed parent '" + family.parents[i].str() + "'");
    }
    leak *= expected_curve(family, i, it->second).array();
  }
  for (Eigen::Index x = 0; x < leak.size(); ++x) leak[x] = detail::clamp_probability(leak[x]);
  // Marginal sums can round to 1 - ulp; the last entry is 1 in exact arithmetic.
  if (leak.size() > 0 && std::abs(leak[leak.size() - 1] - 1.0) <= 1e-9) leak[leak.size() - 1] = 1.0;
  return CumulativeVector(leak.matrix());
}

Subnetwork extract_subnetwork(const Network& net, const std::set<NodeId>& node_set, const ExtractionOptions& options,
                              std::optional<ViewSpec> view) {
  for (const auto& id : node_set) {
    if (!net.contains(id)) throw InputError("node '" + id.str() + "' is not in the network");
  }

  std::set<NodeId> removed_parents;
  for (const auto& id : node_set) {
    for (const auto& p : net.parents(id)) {
      if (!node_set.count(p)) removed_parents.insert(p);
    }
  }

  std::map<NodeId, Vector> marginals;
  if (options.policy == MarginalPolicy::exact) {
    if (!removed_parents.empty()) marginals = eliminate(net, Evidence{}, removed_parents, options.factor_cap);
  } else {
    RootPriorMarginals source(net, node_set);
    for (const auto& p : removed_parents) marginals[p] = source.of(p);
  }

  Provenance prov;
  prov.source_version = version_id(net);
  prov.policy = to_string(options.policy);
  prov.view = std::move(view);

  NetworkBuilder builder;
  builder.title(net.title());
  for (const auto& id : node_set) {
    const Node& node = net.node(id);
    if (net.is_root(id)) {
      builder.add_root(node, net.prior(id).probabilities);
      continue;
    }
    const NoisyMaxFamily& fam = net.family(id);
    NoisyMaxFamily kept;
    kept.child = id;
    std::set<NodeId> removed;
    std::vector<FoldRecord> records;
    for (std::size_t i = 0; i < fam.parents.size(); ++i) {
      const NodeId& p = fam.parents[i];
      if (node_set.count(p)) {
        kept.parents.push_back(p);
        kept.activation.push_back(fam.activation[i]);
      } else {
        removed.insert(p);
        records.push_back({p, marginals.at(p)});
      }
    }
    kept.leak = removed.empty() ? fam.leak : fold_leak(fam, removed, marginals);
    if (!records.empty()) prov.folds[id] = std::move(records);
    builder.add_child(node, std::move(kept));
  }
  builder.provenance(std::move(prov));
  return Subnetwork{builder.build_validated()};
}

HierarchyReport check_hierarchical(const Network& net) {
  std::map<NodeId, int> level = level_assignment(net);
  for (auto& [id, l] : level) {
    if (auto declared = declared_level(net.node(id))) l = *declared;
  }
  HierarchyReport report;
  for (const auto& [parent, child] : net.arcs()) {
    if (level.at(parent) == level.at(child)) report.offending_arcs.emplace_back(parent, child);
  }
  report.is_hierarchical = report.offending_arcs.empty();
  return report;
}

double soundness_audit(const Network& net, const ViewSpec& view, const ExtractionOptions& options) {
  const std::set<NodeId> nodes = select_view(net, view);
  const Subnetwork sub = extract_subnetwork(net, nodes, options, view);
  const MarginalTable full = enumerate_joint(net, Evidence{});
  const MarginalTable reduced = enumerate_joint(sub.network, Evidence{});
  MarginalTable retained;
  for (const auto& id : nodes) retained[id] = full.at(id);
  return compare_marginals(retained, reduced);
}

}  // namespace nmx
