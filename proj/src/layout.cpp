#include "nmx/layout.hpp"

#include <algorithm>
#include <tuple>

namespace nmx {

LayoutResult compute_layout(const Network& net, const std::set<NodeId>& node_set) {
  std::map<NodeId, std::vector<NodeId>> up;
  std::map<NodeId, std::vector<NodeId>> down;
  for (const auto& id : node_set) {
    net.node(id);
    for (const auto& p : net.parents(id)) {
      if (!node_set.count(p)) continue;
      up[id].push_back(p);
      down[p].push_back(id);
    }
  }

  LayoutResult out;
  int depth = 0;
  for (const auto& id : topological_order(net)) {
    if (!node_set.count(id)) continue;
    int layer = 0;
    for (const auto& p : up[id]) layer = std::max(layer, out.nodes[p].layer + 1);
    out.nodes[id].layer = layer;
    depth = std::max(depth, layer + 1);
  }

  std::vector<std::vector<NodeId>> layers(static_cast<std::size_t>(depth));
  for (const auto& [id, place] : out.nodes) layers[static_cast<std::size_t>(place.layer)].push_back(id);
  auto renumber = [&](const std::vector<NodeId>& layer) {
    for (std::size_t i = 0; i < layer.size(); ++i) out.nodes[layer[i]].order = static_cast<int>(i);
  };
  for (const auto& layer : layers) renumber(layer);

  for (int sweep = 0; sweep < kBarycenterSweeps; ++sweep) {
    const bool downward = sweep % 2 == 0;
    auto& neighbours = downward ? up : down;
    for (std::size_t step = 0; step < layers.size(); ++step) {
      auto& layer = layers[downward ? step : layers.size() - 1 - step];
      std::vector<std::tuple<double, NodeId>> keyed;
      for (const auto& id : layer) {
        const auto& adj = neighbours[id];
        double key = out.nodes[id].order;
        if (!adj.empty()) {
          double sum = 0.0;
          for (const auto& n : adj) sum += out.nodes[n].order;
          key = sum / static_cast<double>(adj.size());
        }
        keyed.emplace_back(key, id);
      }
      std::sort(keyed.begin(), keyed.end());
      for (std::size_t i = 0; i < keyed.size(); ++i) layer[i] = std::get<1>(keyed[i]);
      renumber(layer);
    }
  }

  for (const auto& [parent, kids] : down) {
    std::vector<NodeId> sorted = kids;
    std::sort(sorted.begin(), sorted.end(), [&](const NodeId& a, const NodeId& b) {
      const auto& pa = out.nodes[a];
      const auto& pb = out.nodes[b];
      return std::tie(pa.layer, pa.order, a) < std::tie(pb.layer, pb.order, b);
    });
    for (std::size_t i = 0; i < sorted.size(); ++i) out.arcs.push_back({parent, sorted[i], static_cast<int>(i)});
  }
  return out;
}

Json layout_to_json(const LayoutResult& layout) {
  Json nodes = Json::object();
  for (const auto& [id, place] : layout.nodes) nodes[id.str()] = Json{{"layer", place.layer}, {"order", place.order}};
  Json arcs = Json::array();
  for (const auto& a : layout.arcs) arcs.push_back(Json{{"parent", a.parent.str()}, {"child", a.child.str()}, {"rank", a.rank}});
  return Json{{"nodes", nodes}, {"arcs", arcs}};
}

}  // namespace nmx
