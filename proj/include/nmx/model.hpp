#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nmx/error.hpp"

namespace nmx {

using Vector = Eigen::VectorXd;

// Stable, case-sensitive node identifier.
class NodeId {
 public:
  NodeId() = default;
  NodeId(std::string value) : value_(std::move(value)) {}  // NOLINT(implicit)
  NodeId(const char* value) : value_(value) {}              // NOLINT(implicit)

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;

 private:
  std::string value_;
};

using Arc = std::pair<NodeId, NodeId>;  // (parent, child)

// Ordered states; index 0 is the "absent" state.
struct OrderedDomain {
  std::vector<std::string> states;

  OrderedDomain() = default;
  OrderedDomain(std::initializer_list<std::string> names) : states(names) {}
  explicit OrderedDomain(std::vector<std::string> names) : states(std::move(names)) {}

  int size() const { return static_cast<int>(states.size()); }
  std::optional<int> index_of(const std::string& name) const;

  // {"s0", "s1", ...} with "absent" for state 0.
  static OrderedDomain with_size(int size);

  friend bool operator==(const OrderedDomain&, const OrderedDomain&) = default;
};

// values[x] = P(contribution <= x). Invariants are checked by
// validate_network, not on construction, so malformed input stays reportable.
struct CumulativeVector {
  Vector values;

  CumulativeVector() = default;
  explicit CumulativeVector(Vector v) : values(std::move(v)) {}
  CumulativeVector(std::initializer_list<double> v);

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int x) const { return values[x]; }

  static CumulativeVector ones(int size);
  // Returns the first violated invariant, if any.
  std::optional<std::string> check() const;

  friend bool operator==(const CumulativeVector& a, const CumulativeVector& b);
};

// Per-parent cumulative activation curves plus a leak curve.
// activation[i][d - 1] is the curve for parents[i] at state d >= 1; state 0
// contributes the all-ones curve and is not stored.
struct NoisyMaxFamily {
  NodeId child;
  std::vector<NodeId> parents;
  std::vector<std::vector<CumulativeVector>> activation;
  CumulativeVector leak;

  // c[i][d][x], 1 for d == 0.
  double curve(std::size_t parent, int state, int x) const {
    return state == 0 ? 1.0 : activation[parent][static_cast<std::size_t>(state - 1)][x];
  }
  int child_size() const { return leak.size(); }
  // Number of states of parent i, as implied by the stored curves.
  int parent_size(std::size_t parent) const {
    return static_cast<int>(activation[parent].size()) + 1;
  }

  friend bool operator==(const NoisyMaxFamily&, const NoisyMaxFamily&) = default;
};

struct RootPrior {
  NodeId node;
  Vector probabilities;

  friend bool operator==(const RootPrior& a, const RootPrior& b);
};

struct Node {
  NodeId id;
  std::string name;
  OrderedDomain domain;
  std::set<std::string> labels;

  friend bool operator==(const Node&, const Node&) = default;
};

enum class Relation {
  ancestors,
  descendants,
  predecessors_and_successors,
  immediate_predecessors,
  immediate_successors,
  markov_blanket,
};

std::string to_string(Relation relation);
Relation parse_relation(const std::string& name);  // throws InputError

// Declarative subnetwork selection.
struct ViewSpec {
  std::set<NodeId> seeds;
  Relation relation = Relation::markov_blanket;
  std::optional<std::set<std::string>> label_filter;
  bool include_seeds = true;

  friend bool operator==(const ViewSpec&, const ViewSpec&) = default;
};

struct FoldRecord {
  NodeId parent;
  Vector marginal;  // distribution of the removed parent used for folding

  friend bool operator==(const FoldRecord& a, const FoldRecord& b);
};

// Lineage of an extracted subnetwork.
struct Provenance {
  std::string source_version;
  std::string policy;
  std::optional<ViewSpec> view;
  std::map<NodeId, std::vector<FoldRecord>> folds;  // keyed by retained child

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Evidence {
  std::map<NodeId, int> assignments;
};

class NetworkBuilder;

// Immutable network value. Content may be invalid (see validate_network);
// NetworkBuilder::build_validated yields only valid networks.
class Network {
 public:
  static constexpr int kFormatVersion = 1;

  Network() = default;

  const std::string& title() const { return title_; }
  int format_version() const { return format_version_; }
  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  const std::map<NodeId, RootPrior>& roots() const { return roots_; }
  const std::map<NodeId, NoisyMaxFamily>& families() const { return families_; }
  const std::optional<Provenance>& provenance() const { return provenance_; }

  bool contains(const NodeId& id) const { return nodes_.count(id) > 0; }
  const Node& node(const NodeId& id) const;  // throws InputError
  bool is_root(const NodeId& id) const { return roots_.count(id) > 0; }
  const NoisyMaxFamily& family(const NodeId& id) const;  // throws InputError
  const RootPrior& prior(const NodeId& id) const;        // throws InputError

  // Empty for roots and unknown ids.
  const std::vector<NodeId>& parents(const NodeId& id) const;
  // Sorted by id.
  const std::vector<NodeId>& children(const NodeId& id) const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t arc_count() const;
  // Sorted by (parent, child).
  std::vector<Arc> arcs() const;

  NetworkBuilder to_builder() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  friend class NetworkBuilder;
  void index_children();

  std::string title_;
  int format_version_ = kFormatVersion;
  std::map<NodeId, Node> nodes_;
  std::map<NodeId, RootPrior> roots_;
  std::map<NodeId, NoisyMaxFamily> families_;
  std::optional<Provenance> provenance_;
  std::map<NodeId, std::vector<NodeId>> children_;
};

struct Violation {
  std::string code;
  std::string message;
  NodeId node;
  std::optional<NodeId> parent;
  std::optional<int> state;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<Violation> warnings;  // lint only, never invalidates

  bool valid() const { return violations.empty(); }
  std::string summary() const;

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report)
      : Error(report.summary()), report_(std::move(report)) {}

  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

class NetworkBuilder {
 public:
  NetworkBuilder() = default;
  explicit NetworkBuilder(const Network& base) : net_(base) {}

  NetworkBuilder& title(std::string title);
  NetworkBuilder& format_version(int version);
  NetworkBuilder& add_root(Node node, Vector prior);
  NetworkBuilder& add_child(Node node, NoisyMaxFamily family);
  // Adds or replaces node metadata without touching its prior/family.
  NetworkBuilder& put_node(Node node);
  NetworkBuilder& set_prior(const NodeId& id, Vector prior);
  NetworkBuilder& set_family(NoisyMaxFamily family);
  NetworkBuilder& set_leak(const NodeId& id, CumulativeVector leak);
  NetworkBuilder& set_labels(const NodeId& id, std::set<std::string> labels);
  NetworkBuilder& remove_node(const NodeId& id);
  NetworkBuilder& provenance(std::optional<Provenance> provenance);

  Network build() const;
  // Throws ValidationError when validate_network reports violations.
  Network build_validated() const;

 private:
  Network net_;
};

// Every violated invariant, with node/parent/state coordinates.
ValidationReport validate_network(const Network& net);

// Parents before children, ties broken by id. Throws StructuralError naming a
// cycle.
std::vector<NodeId> topological_order(const Network& net);

// Longest path from any root; roots at 0. Throws StructuralError on a cycle.
std::map<NodeId, int> level_assignment(const Network& net);

// One directed cycle starting from its smallest id, or empty when acyclic.
std::vector<NodeId> find_cycle(const Network& net);

// Throws InputError for unknown nodes or out-of-range states.
void check_evidence(const Network& net, const Evidence& evidence);

}  // namespace nmx

template <>
struct std::hash<nmx::NodeId> {
  std::size_t operator()(const nmx::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
