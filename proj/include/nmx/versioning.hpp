#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nmx/model.hpp"

namespace nmx {

inline constexpr const char* kDiffFormat = "nmx-diff";

// Everything stored for one node: metadata plus its prior or family.
struct NodeRecord {
  Node node;
  std::optional<Vector> prior;
  std::optional<NoisyMaxFamily> family;

  static NodeRecord of(const Network& net, const NodeId& id);
  friend bool operator==(const NodeRecord& a, const NodeRecord& b);
};

// Full old/new payloads for a node present in both versions.
struct ParameterChange {
  NodeId node;
  NodeRecord before;
  NodeRecord after;

  friend bool operator==(const ParameterChange&, const ParameterChange&) = default;
};

struct MetadataChange {
  std::string title_before;
  std::string title_after;
  std::optional<Provenance> provenance_before;
  std::optional<Provenance> provenance_after;

  friend bool operator==(const MetadataChange&, const MetadataChange&) = default;
};

// Element-wise difference between two versions, keyed by node id. All lists
// are sorted by id (arcs by parent, then child).
struct NetworkDiff {
  std::string base_version;
  std::string target_version;
  std::vector<NodeRecord> nodes_added;
  std::vector<NodeRecord> nodes_removed;
  std::vector<Arc> arcs_added;
  std::vector<Arc> arcs_removed;
  std::vector<ParameterChange> parameter_changes;
  std::optional<MetadataChange> metadata;

  bool empty() const;
  friend bool operator==(const NetworkDiff&, const NetworkDiff&) = default;
};

NetworkDiff diff(const Network& a, const Network& b);

// Applies `d` to `net`. Throws VersionError when net is not d's base (or the
// recorded payloads disagree with net), ValidationError when the result
// violates an invariant. `net` is never modified.
Network apply_diff(const Network& net, const NetworkDiff& d);

NetworkDiff invert(const NetworkDiff& d);

enum class ChangeStatus { added, removed, changed, unchanged };
std::string to_string(ChangeStatus status);

struct Annotation {
  std::map<NodeId, ChangeStatus> nodes;
  std::map<Arc, ChangeStatus> arcs;
};

// Status of every node and arc in the union of the base and target graphs.
// `net` may be either end of the diff.
Annotation annotate(const Network& net, const NetworkDiff& d);

std::string save_diff(const NetworkDiff& d);
NetworkDiff load_diff(std::string_view text);

}  // namespace nmx
