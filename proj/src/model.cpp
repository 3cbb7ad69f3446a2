#include "nmx/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nmx {

namespace {

const std::vector<NodeId> kNoNodes;

constexpr double kPriorSumTolerance = 1e-12;

std::string join_ids(const std::vector<NodeId>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ',';
    out += ids[i].str();
  }
  return out;
}

bool same_vector(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

}  // namespace

std::optional<int> OrderedDomain::index_of(const std::string& name) const {
  auto it = std::find(states.begin(), states.end(), name);
  if (it == states.end()) return std::nullopt;
  return static_cast<int>(it - states.begin());
}

OrderedDomain OrderedDomain::with_size(int size) {
  OrderedDomain d;
  for (int i = 0; i < size; ++i) d.states.push_back(i == 0 ? "absent" : "s" + std::to_string(i));
  return d;
}

CumulativeVector::CumulativeVector(std::initializer_list<double> v) : values(static_cast<Eigen::Index>(v.size())) {
  Eigen::Index i = 0;
  for (double x : v) values[i++] = x;
}

CumulativeVector CumulativeVector::ones(int size) { return CumulativeVector(Vector::Ones(size)); }

std::optional<std::string> CumulativeVector::check() const {
  if (values.size() == 0) return "cumulative vector is empty";
  for (Eigen::Index x = 0; x < values.size(); ++x) {
    if (!(values[x] >= 0.0 && values[x] <= 1.0)) return "cumulative vector entry outside [0,1]";
  }
  for (Eigen::Index x = 1; x < values.size(); ++x) {
    if (values[x] < values[x - 1]) return "cumulative vector not nondecreasing";
  }
  if (values[values.size() - 1] != 1.0) return "cumulative vector must end at 1";
  return std::nullopt;
}

bool operator==(const CumulativeVector& a, const CumulativeVector& b) { return same_vector(a.values, b.values); }

bool operator==(const RootPrior& a, const RootPrior& b) {
  return a.node == b.node && same_vector(a.probabilities, b.probabilities);
}

bool operator==(const FoldRecord& a, const FoldRecord& b) {
  return a.parent == b.parent && same_vector(a.marginal, b.marginal);
}

std::string to_string(Relation relation) {
  switch (relation) {
    case Relation::ancestors: return "ancestors";
    case Relation::descendants: return "descendants";
    case Relation::predecessors_and_successors: return "predecessors_and_successors";
    case Relation::immediate_predecessors: return "immediate_predecessors";
    case Relation::immediate_successors: return "immediate_successors";
    case Relation::markov_blanket: return "markov_blanket";
  }
  return "unknown";
}

Relation parse_relation(const std::string& name) {
  for (Relation r : {Relation::ancestors, Relation::descendants, Relation::predecessors_and_successors,
                     Relation::immediate_predecessors, Relation::immediate_successors, Relation::markov_blanket}) {
    if (to_string(r) == name) return r;
  }
  // Predecessor/successor vocabulary for the closure relations.
  if (name == "predecessors") return Relation::ancestors;
  if (name == "successors") return Relation::descendants;
  throw InputError("unknown relation '" + name + "'");
}

// ---------------------------------------------------------------------------
// Network

const Node& Network::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw InputError("unknown node '" + id.str() + "'");
  return it->second;
}

const NoisyMaxFamily& Network::family(const NodeId& id) const {
  auto it = families_.find(id);
  if (it == families_.end()) throw InputError("node '" + id.str() + "' has no family");
  return it->second;
}

const RootPrior& Network::prior(const NodeId& id) const {
  auto it = roots_.find(id);
  if (it == roots_.end()) throw InputError("node '" + id.str() + "' has no prior");
  return it->second;
}

const std::vector<NodeId>& Network::parents(const NodeId& id) const {
  auto it = families_.find(id);
  return it == families_.end() ? kNoNodes : it->second.parents;
}

const std::vector<NodeId>& Network::children(const NodeId& id) const {
  auto it = children_.find(id);
  return it == children_.end() ? kNoNodes : it->second;
}

std::size_t Network::arc_count() const {
  std::size_t n = 0;
  for (const auto& [id, fam] : families_) n += fam.parents.size();
  return n;
}

std::vector<Arc> Network::arcs() const {
  std::vector<Arc> out;
  for (const auto& [id, fam] : families_) {
    for (const auto& p : fam.parents) out.emplace_back(p, id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

NetworkBuilder Network::to_builder() const { return NetworkBuilder(*this); }

void Network::index_children() {
  children_.clear();
  for (const auto& [id, fam] : families_) {
    if (!nodes_.count(id)) continue;
    for (const auto& p : fam.parents) {
      if (nodes_.count(p)) children_[p].push_back(id);
    }
  }
  for (auto& [id, kids] : children_) {
    std::sort(kids.begin(), kids.end());
    kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
  }
}

bool operator==(const Network& a, const Network& b) {
  return a.title_ == b.title_ && a.format_version_ == b.format_version_ && a.nodes_ == b.nodes_ &&
         a.roots_ == b.roots_ && a.families_ == b.families_ && a.provenance_ == b.provenance_;
}

// ---------------------------------------------------------------------------
// Builder

NetworkBuilder& NetworkBuilder::title(std::string title) {
  net_.title_ = std::move(title);
  return *this;
}

NetworkBuilder& NetworkBuilder::format_version(int version) {
  net_.format_version_ = version;
  return *this;
}

NetworkBuilder& NetworkBuilder::add_root(Node node, Vector prior) {
  NodeId id = node.id;
  net_.families_.erase(id);
  net_.nodes_[id] = std::move(node);
  net_.roots_[id] = RootPrior{id, std::move(prior)};
  return *this;
}

NetworkBuilder& NetworkBuilder::add_child(Node node, NoisyMaxFamily family) {
  NodeId id = node.id;
  family.child = id;
  net_.roots_.erase(id);
  net_.nodes_[id] = std::move(node);
  net_.families_[id] = std::move(family);
  return *this;
}

NetworkBuilder& NetworkBuilder::put_node(Node node) {
  NodeId id = node.id;
  net_.nodes_[id] = std::move(node);
  return *this;
}

NetworkBuilder& NetworkBuilder::set_prior(const NodeId& id, Vector prior) {
  net_.families_.erase(id);
  net_.roots_[id] = RootPrior{id, std::move(prior)};
  return *this;
}

NetworkBuilder& NetworkBuilder::set_family(NoisyMaxFamily family) {
  NodeId id = family.child;
  net_.roots_.erase(id);
  net_.families_[id] = std::move(family);
  return *this;
}

NetworkBuilder& NetworkBuilder::set_leak(const NodeId& id, CumulativeVector leak) {
  auto it = net_.families_.find(id);
  if (it == net_.families_.end()) throw InputError("node '" + id.str() + "' has no family");
  it->second.leak = std::move(leak);
  return *this;
}

NetworkBuilder& NetworkBuilder::set_labels(const NodeId& id, std::set<std::string> labels) {
  auto it = net_.nodes_.find(id);
  if (it == net_.nodes_.end()) throw InputError("unknown node '" + id.str() + "'");
  it->second.labels = std::move(labels);
  return *this;
}

NetworkBuilder& NetworkBuilder::remove_node(const NodeId& id) {
  net_.nodes_.erase(id);
  net_.roots_.erase(id);
  net_.families_.erase(id);
  return *this;
}

NetworkBuilder& NetworkBuilder::provenance(std::optional<Provenance> provenance) {
  net_.provenance_ = std::move(provenance);
  return *this;
}

Network NetworkBuilder::build() const {
  Network out = net_;
  out.index_children();
  return out;
}

Network NetworkBuilder::build_validated() const {
  Network out = build();
  ValidationReport report = validate_network(out);
  if (!report.valid()) throw ValidationError(std::move(report));
  return out;
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationReport::summary() const {
  if (violations.empty()) return "valid";
  std::ostringstream out;
  out << violations.size() << " violation(s): ";
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    if (i > 0) out << "; ";
    out << v.message << " [node " << v.node.str();
    if (v.parent) out << ", parent " << v.parent->str();
    if (v.state) out << ", state " << *v.state;
    out << "]";
  }
  return out.str();
}

namespace {

class Reporter {
 public:
  explicit Reporter(ValidationReport& report) : report_(report) {}

  void error(std::string code, std::string message, const NodeId& node, std::optional<NodeId> parent = std::nullopt,
             std::optional<int> state = std::nullopt) {
    report_.violations.push_back({std::move(code), std::move(message), node, std::move(parent), state});
  }
  void warn(std::string code, std::string message, const NodeId& node, std::optional<NodeId> parent = std::nullopt,
            std::optional<int> state = std::nullopt) {
    report_.warnings.push_back({std::move(code), std::move(message), node, std::move(parent), state});
  }

 private:
  ValidationReport& report_;
};

void check_curve(Reporter& r, const CumulativeVector& curve, int child_size, const std::string& what,
                 const NodeId& node, std::optional<NodeId> parent, std::optional<int> state) {
  if (curve.size() != child_size) {
    r.error("curve-size", what + " has " + std::to_string(curve.size()) + " entries, child domain has " +
                              std::to_string(child_size),
            node, parent, state);
    return;
  }
  if (auto msg = curve.check()) r.error("cumulative", *msg, node, parent, state);
}

void check_family(Reporter& r, const Network& net, const NodeId& id, const NoisyMaxFamily& fam) {
  const int child_size = net.node(id).domain.size();
  if (fam.child != id) r.error("family-child", "family child '" + fam.child.str() + "' does not match node", id);

  std::set<NodeId> seen;
  for (const auto& p : fam.parents) {
    if (p == id) r.error("self-parent", "node lists itself as a parent", id, p);
    if (!seen.insert(p).second) r.error("duplicate-parent", "parent listed twice", id, p);
    if (!net.contains(p)) r.error("unknown-parent", "parent does not resolve", id, p);
  }

  if (fam.activation.size() != fam.parents.size()) {
    r.error("activation-shape", "activation curves given for " + std::to_string(fam.activation.size()) +
                                    " parents, family has " + std::to_string(fam.parents.size()),
            id);
  } else {
    for (std::size_t i = 0; i < fam.parents.size(); ++i) {
      const NodeId& p = fam.parents[i];
      const auto& curves = fam.activation[i];
      if (net.contains(p)) {
        const int parent_size = net.node(p).domain.size();
        if (static_cast<int>(curves.size()) != parent_size - 1) {
          r.error("activation-shape", "expected " + std::to_string(parent_size - 1) +
                                          " activation curves (one per parent state >= 1), got " +
                                          std::to_string(curves.size()),
                  id, p);
          continue;
        }
      }
      bool all_sized = true;
      for (std::size_t d = 0; d < curves.size(); ++d) {
        const int state = static_cast<int>(d) + 1;
        check_curve(r, curves[d], child_size, "activation curve", id, p, state);
        all_sized = all_sized && curves[d].size() == child_size;
      }
      if (!all_sized) continue;
      // Lint: accumulation (curves pointwise nonincreasing in parent state).
      for (std::size_t d = 1; d < curves.size(); ++d) {
        if ((curves[d].values.array() > curves[d - 1].values.array()).any()) {
          r.warn("activation-not-accumulating",
                 "activation curve rises with parent state (higher state makes child less severe)", id, p,
                 static_cast<int>(d) + 1);
        }
      }
    }
  }
  check_curve(r, fam.leak, child_size, "leak", id, std::nullopt, std::nullopt);
}

void check_prior(Reporter& r, const Network& net, const NodeId& id, const RootPrior& prior) {
  if (prior.node != id) r.error("prior-node", "prior node '" + prior.node.str() + "' does not match node", id);
  const int size = net.node(id).domain.size();
  if (prior.probabilities.size() != size) {
    r.error("prior-size", "prior has " + std::to_string(prior.probabilities.size()) + " entries, domain has " +
                              std::to_string(size),
            id);
    return;
  }
  for (int x = 0; x < size; ++x) {
    if (!(prior.probabilities[x] >= 0.0 && prior.probabilities[x] <= 1.0)) {
      r.error("prior-range", "prior probability outside [0,1]", id, std::nullopt, x);
    }
  }
  const double sum = prior.probabilities.sum();
  if (!(std::abs(sum - 1.0) <= kPriorSumTolerance)) r.error("prior-sum", "prior must sum to 1", id);
}

}  // namespace

ValidationReport validate_network(const Network& net) {
  ValidationReport report;
  Reporter r(report);

  for (const auto& [id, node] : net.nodes()) {
    if (id.empty()) r.error("node-id", "node id must be non-empty", id);
    if (node.id != id) r.error("node-id", "node id '" + node.id.str() + "' does not match key", id);
    if (node.domain.size() < 2) r.error("domain-size", "domain must have at least 2 states", id);
    std::set<std::string> names(node.domain.states.begin(), node.domain.states.end());
    if (names.size() != node.domain.states.size()) r.error("domain-names", "state names must be unique", id);

    const bool has_prior = net.roots().count(id) > 0;
    const bool has_family = net.families().count(id) > 0;
    if (has_prior && has_family) r.error("node-kind", "node has both a prior and a family", id);
    if (!has_prior && !has_family) r.error("node-kind", "node has neither a prior nor a family", id);
  }
  for (const auto& [id, prior] : net.roots()) {
    if (!net.contains(id)) {
      r.error("unknown-node", "prior for unknown node", id);
      continue;
    }
    check_prior(r, net, id, prior);
  }
  for (const auto& [id, fam] : net.families()) {
    if (!net.contains(id)) {
      r.error("unknown-node", "family for unknown node", id);
      continue;
    }
    check_family(r, net, id, fam);
  }

  if (auto cycle = find_cycle(net); !cycle.empty()) {
    r.error("cycle", "cycle detected: " + join_ids(cycle), cycle.front());
  }

  if (const auto& prov = net.provenance()) {
    for (const auto& [child, records] : prov->folds) {
      if (!net.contains(child)) r.error("fold-child", "fold record for a node not in the network", child);
      for (const auto& rec : records) {
        if (net.contains(rec.parent)) {
          r.error("fold-parent", "folded parent is still in the network", child, rec.parent);
        }
      }
    }
  }
  return report;
}

std::vector<NodeId> find_cycle(const Network& net) {
  enum class Mark { white, grey, black };
  std::map<NodeId, Mark> mark;
  for (const auto& [id, node] : net.nodes()) mark[id] = Mark::white;

  std::vector<NodeId> stack;
  std::vector<NodeId> cycle;

  // Iterative DFS over parent -> child arcs, stack holds the grey path.
  for (const auto& [start, unused] : net.nodes()) {
    if (mark[start] != Mark::white) continue;
    std::vector<std::pair<NodeId, std::size_t>> frames{{start, 0}};
    mark[start] = Mark::grey;
    stack.assign(1, start);
    while (!frames.empty() && cycle.empty()) {
      auto& [current, next] = frames.back();
      const auto& kids = net.children(current);
      if (next < kids.size()) {
        const NodeId kid = kids[next++];
        if (mark[kid] == Mark::grey) {
          auto from = std::find(stack.begin(), stack.end(), kid);
          cycle.assign(from, stack.end());
        } else if (mark[kid] == Mark::white) {
          mark[kid] = Mark::grey;
          stack.push_back(kid);
          frames.emplace_back(kid, 0);
        }
      } else {
        mark[current] = Mark::black;
        stack.pop_back();
        frames.pop_back();
      }
    }
    if (!cycle.empty()) break;
  }
  if (!cycle.empty()) {
    std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
  }
  return cycle;
}

std::vector<NodeId> topological_order(const Network& net) {
  std::map<NodeId, std::size_t> pending;
  std::set<NodeId> ready;
  for (const auto& [id, node] : net.nodes()) {
    std::size_t n = 0;
    for (const auto& p : net.parents(id)) n += net.contains(p) ? 1 : 0;
    pending[id] = n;
    if (n == 0) ready.insert(id);
  }
  std::vector<NodeId> order;
  order.reserve(net.size());
  while (!ready.empty()) {
    NodeId id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& kid : net.children(id)) {
      if (--pending[kid] == 0) ready.insert(kid);
    }
  }
  if (order.size() != net.size()) {
    throw StructuralError("cycle detected: " + join_ids(find_cycle(net)));
  }
  return order;
}

std::map<NodeId, int> level_assignment(const Network& net) {
  std::map<NodeId, int> level;
  for (const auto& id : topological_order(net)) {
    int l = 0;
    for (const auto& p : net.parents(id)) {
      if (auto it = level.find(p); it != level.end()) l = std::max(l, it->second + 1);
    }
    level[id] = l;
  }
  return level;
}

void check_evidence(const Network& net, const Evidence& evidence) {
  for (const auto& [id, state] : evidence.assignments) {
    const Node& node = net.node(id);
    if (state < 0 || state >= node.domain.size()) {
      throw InputError("evidence state " + std::to_string(state) + " out of range for node '" + id.str() + "'");
    }
  }
}

}  // namespace nmx
