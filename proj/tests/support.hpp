#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "nmx/model.hpp"

namespace nmx::testing {

using Rng = std::mt19937_64;

inline Node make_node(const std::string& id, int states, std::set<std::string> labels = {}) {
  return Node{NodeId(id), id, OrderedDomain::with_size(states), std::move(labels)};
}

inline Vector random_distribution(Rng& rng, int size) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = u(rng);
  return v / v.sum();
}

// Sorted uniforms followed by an exact 1.
inline CumulativeVector random_cumulative(Rng& rng, int size) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> cuts(static_cast<std::size_t>(size - 1));
  for (auto& c : cuts) c = u(rng);
  std::sort(cuts.begin(), cuts.end());
  Vector v(size);
  for (int i = 0; i + 1 < size; ++i) v[i] = cuts[static_cast<std::size_t>(i)];
  v[size - 1] = 1.0;
  return CumulativeVector(v);
}

inline NoisyMaxFamily random_family(Rng& rng, const NodeId& child, int child_size,
                                    const std::vector<std::pair<NodeId, int>>& parents, bool with_leak = true) {
  NoisyMaxFamily fam;
  fam.child = child;
  for (const auto& [pid, size] : parents) {
    fam.parents.push_back(pid);
    std::vector<CumulativeVector> curves;
    for (int d = 1; d < size; ++d) curves.push_back(random_cumulative(rng, child_size));
    fam.activation.push_back(std::move(curves));
  }
  fam.leak = with_leak ? random_cumulative(rng, child_size) : CumulativeVector::ones(child_size);
  return fam;
}

// Random DAG over ids "v00".. in index order; arcs only go forward.
inline Network random_network(Rng& rng, int n, int max_parents, int max_states, double arc_probability) {
  std::uniform_int_distribution<int> states(2, max_states);
  std::bernoulli_distribution arc(arc_probability);
  std::vector<NodeId> ids;
  std::vector<int> sizes;
  NetworkBuilder b;
  b.title("random");
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%02d", i);
    ids.emplace_back(buf);
    sizes.push_back(states(rng));
    std::vector<std::pair<NodeId, int>> parents;
    for (int j = 0; j < i; ++j) {
      if (static_cast<int>(parents.size()) < max_parents && arc(rng)) parents.emplace_back(ids[j], sizes[j]);
    }
    const Node node = make_node(buf, sizes.back());
    if (parents.empty()) {
      b.add_root(node, random_distribution(rng, sizes.back()));
    } else {
      b.add_child(node, random_family(rng, node.id, sizes.back(), parents));
    }
  }
  return b.build_validated();
}

// Roots "r*" feeding children "c*"; every child has at least one parent.
inline Network two_level_network(Rng& rng, int roots, int children, int max_parents, int max_states) {
  std::uniform_int_distribution<int> states(2, max_states);
  std::uniform_int_distribution<int> pick(0, roots - 1);
  std::uniform_int_distribution<int> fan(1, std::min(max_parents, roots));
  NetworkBuilder b;
  b.title("two-level");
  std::vector<int> root_sizes;
  for (int i = 0; i < roots; ++i) {
    root_sizes.push_back(states(rng));
    b.add_root(make_node("r" + std::to_string(i), root_sizes.back(), {"level:0"}),
               random_distribution(rng, root_sizes.back()));
  }
  for (int i = 0; i < children; ++i) {
    const int size = states(rng);
    std::set<int> chosen;
    const int k = fan(rng);
    while (static_cast<int>(chosen.size()) < k) chosen.insert(pick(rng));
    std::vector<std::pair<NodeId, int>> parents;
    for (int r : chosen) parents.emplace_back(NodeId("r" + std::to_string(r)), root_sizes[static_cast<std::size_t>(r)]);
    const Node node = make_node("c" + std::to_string(i), size, {"level:1"});
    b.add_child(node, random_family(rng, node.id, size, parents));
  }
  return b.build_validated();
}

inline Evidence random_evidence(Rng& rng, const Network& net, double probability) {
  std::bernoulli_distribution observe(probability);
  Evidence ev;
  for (const auto& [id, node] : net.nodes()) {
    if (!observe(rng)) continue;
    std::uniform_int_distribution<int> state(0, node.domain.size() - 1);
    ev.assignments[id] = state(rng);
  }
  return ev;
}

// One random edit: parameters, labels, title, node or arc insertion/removal.
// Keeps the network valid and acyclic.
inline Network random_edit(Rng& rng, const Network& net, int& counter) {
  std::uniform_int_distribution<int> op(0, 7);
  std::vector<NodeId> ids;
  for (const auto& [id, node] : net.nodes()) ids.push_back(id);
  auto any = [&](const std::vector<NodeId>& from) {
    std::uniform_int_distribution<std::size_t> pick(0, from.size() - 1);
    return from[pick(rng)];
  };
  NetworkBuilder b = net.to_builder();
  std::vector<NodeId> children;
  for (const auto& [id, fam] : net.families()) children.push_back(id);
  switch (op(rng)) {
    case 0:
      if (!children.empty()) {
        const NodeId c = any(children);
        b.set_leak(c, random_cumulative(rng, net.node(c).domain.size()));
        return b.build_validated();
      }
      [[fallthrough]];
    case 1: {
      const NodeId r = any(std::vector<NodeId>(ids));
      if (net.is_root(r)) {
        b.set_prior(r, random_distribution(rng, net.node(r).domain.size()));
      } else {
        b.set_labels(r, {"edited-" + std::to_string(counter++)});
      }
      return b.build_validated();
    }
    case 2:
      b.title("title-" + std::to_string(counter++));
      return b.build_validated();
    case 3: {
      const std::string id = "n" + std::to_string(counter++);
      const int size = std::uniform_int_distribution<int>(2, 3)(rng);
      const NodeId p = any(ids);
      b.add_child(make_node(id, size), random_family(rng, NodeId(id), size, {{p, net.node(p).domain.size()}}));
      return b.build_validated();
    }
    case 4: {
      std::vector<NodeId> leaves;
      for (const auto& id : ids) {
        if (net.children(id).empty()) leaves.push_back(id);
      }
      if (leaves.size() > 1 && ids.size() > 3) {
        b.remove_node(any(leaves));
        return b.build_validated();
      }
      [[fallthrough]];
    }
    case 5: {
      // New arc from an earlier node in topological order.
      const auto order = topological_order(net);
      std::vector<std::pair<NodeId, NodeId>> candidates;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (net.is_root(order[i])) continue;
        const auto& parents = net.parents(order[i]);
        for (std::size_t j = 0; j < i; ++j) {
          if (std::find(parents.begin(), parents.end(), order[j]) == parents.end()) candidates.emplace_back(order[j], order[i]);
        }
      }
      if (!candidates.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const auto [p, c] = candidates[pick(rng)];
        NoisyMaxFamily fam = net.family(c);
        fam.parents.push_back(p);
        std::vector<CumulativeVector> curves;
        for (int d = 1; d < net.node(p).domain.size(); ++d) curves.push_back(random_cumulative(rng, fam.child_size()));
        fam.activation.push_back(std::move(curves));
        b.set_family(fam);
        return b.build_validated();
      }
      [[fallthrough]];
    }
    case 6: {
      std::vector<NodeId> multi;
      for (const auto& [id, fam] : net.families()) {
        if (fam.parents.size() > 1) multi.push_back(id);
      }
      if (!multi.empty()) {
        NoisyMaxFamily fam = net.family(any(multi));
        std::uniform_int_distribution<std::size_t> pick(0, fam.parents.size() - 1);
        const std::size_t k = pick(rng);
        fam.parents.erase(fam.parents.begin() + static_cast<std::ptrdiff_t>(k));
        fam.activation.erase(fam.activation.begin() + static_cast<std::ptrdiff_t>(k));
        b.set_family(fam);
        return b.build_validated();
      }
      [[fallthrough]];
    }
    default: {
      const NodeId id = any(ids);
      b.set_labels(id, {"tag-" + std::to_string(counter++)});
      return b.build_validated();
    }
  }
}

}  // namespace nmx::testing
