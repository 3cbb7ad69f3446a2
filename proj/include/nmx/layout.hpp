#pragma once

#include <map>
#include <set>
#include <vector>

#include "nmx/io.hpp"
#include "nmx/model.hpp"

namespace nmx {

struct NodePlacement {
  int layer = 0;
  int order = 0;  // unique within the layer

  friend bool operator==(const NodePlacement&, const NodePlacement&) = default;
};

struct ArcRoute {
  NodeId parent;
  NodeId child;
  int rank = 0;  // position among the parent's outgoing arcs, left to right

  friend bool operator==(const ArcRoute&, const ArcRoute&) = default;
};

struct LayoutResult {
  std::map<NodeId, NodePlacement> nodes;
  std::vector<ArcRoute> arcs;

  friend bool operator==(const LayoutResult&, const LayoutResult&) = default;
};

inline constexpr int kBarycenterSweeps = 4;

// Layers are longest-path levels of the induced subgraph; order within a
// layer comes from alternating barycenter sweeps (ties by id).
LayoutResult compute_layout(const Network& net, const std::set<NodeId>& node_set);

Json layout_to_json(const LayoutResult& layout);

}  // namespace nmx
