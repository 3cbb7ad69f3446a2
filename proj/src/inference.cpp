#include "nmx/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nmx {

namespace {

// Dense factor over variables indexed into a VarTable; the last variable in
// `vars` varies fastest.
struct Factor {
  std::vector<int> vars;
  std::vector<int> cards;
  Eigen::ArrayXd values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

// Variable numbering in id order, so index order is the lexicographic
// tie-break.
struct VarTable {
  std::vector<NodeId> ids;
  std::map<NodeId, int> index;
  std::vector<int> cards;

  explicit VarTable(const TableNetwork& net) {
    for (const auto& [id, node] : net.nodes) {
      index[id] = static_cast<int>(ids.size());
      ids.push_back(id);
      cards.push_back(node.domain.size());
    }
  }
};

std::string describe_scope(const VarTable& vt, const std::vector<int>& vars) {
  std::string out = "{";
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i > 0) out += ',';
    out += vt.ids[static_cast<std::size_t>(vars[i])].str();
  }
  return out + "}";
}

std::vector<std::size_t> strides_of(const std::vector<int>& cards) {
  std::vector<std::size_t> strides(cards.size());
  std::size_t s = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    strides[i] = s;
    s *= static_cast<std::size_t>(cards[i]);
  }
  return strides;
}

Factor factor_from_table(const VarTable& vt, const TableNode& node) {
  Factor f;
  for (const auto& p : node.parents) f.vars.push_back(vt.index.at(p));
  f.vars.push_back(vt.index.at(node.id));
  for (int v : f.vars) f.cards.push_back(vt.cards[static_cast<std::size_t>(v)]);
  // Cpt layout (parents mixed radix, child fastest) already matches.
  f.values = node.cpt.table;
  return f;
}

Factor restrict_factor(const Factor& f, int var, int state) {
  auto pos = static_cast<std::size_t>(std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
  if (pos == f.vars.size()) return f;
  const auto strides = strides_of(f.cards);
  Factor out;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    if (i == pos) continue;
    out.vars.push_back(f.vars[i]);
    out.cards.push_back(f.cards[i]);
  }
  const std::size_t n = std::accumulate(out.cards.begin(), out.cards.end(), std::size_t{1},
                                        [](std::size_t a, int c) { return a * static_cast<std::size_t>(c); });
  out.values.resize(static_cast<Eigen::Index>(n));
  std::vector<int> assign(out.vars.size(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t src = static_cast<std::size_t>(state) * strides[pos];
    for (std::size_t i = 0, j = 0; i < f.vars.size(); ++i) {
      if (i == pos) continue;
      src += static_cast<std::size_t>(assign[j++]) * strides[i];
    }
    out.values[static_cast<Eigen::Index>(k)] = f.values[static_cast<Eigen::Index>(src)];
    for (std::size_t j = assign.size(); j-- > 0;) {
      if (++assign[j] < out.cards[j]) break;
      assign[j] = 0;
    }
  }
  return out;
}

// Product of `factors`, then `var` summed out (var < 0 keeps every variable).
Factor multiply_and_sum(const VarTable& vt, const std::vector<const Factor*>& factors, int var,
                        std::size_t cap) {
  std::vector<int> vars;
  for (const Factor* f : factors) vars.insert(vars.end(), f->vars.begin(), f->vars.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());

  std::vector<int> cards;
  double product_size = 1.0;
  for (int v : vars) {
    cards.push_back(vt.cards[static_cast<std::size_t>(v)]);
    product_size *= cards.back();
  }
  if (product_size > static_cast<double>(cap)) {
    throw CapacityError("factor " + describe_scope(vt, vars) + " needs " +
                        std::to_string(static_cast<unsigned long long>(product_size)) + " entries, cap is " +
                        std::to_string(cap));
  }

  // Per operand, stride of each product variable (0 when absent).
  std::vector<std::vector<std::size_t>> operand_strides;
  for (const Factor* f : factors) {
    const auto own = strides_of(f->cards);
    std::vector<std::size_t> s(vars.size(), 0);
    for (std::size_t i = 0; i < f->vars.size(); ++i) {
      auto at = std::lower_bound(vars.begin(), vars.end(), f->vars[i]) - vars.begin();
      s[static_cast<std::size_t>(at)] = own[i];
    }
    operand_strides.push_back(std::move(s));
  }

  Factor out;
  std::size_t drop = vars.size();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] == var) {
      drop = i;
      continue;
    }
    out.vars.push_back(vars[i]);
    out.cards.push_back(cards[i]);
  }
  const auto out_strides = strides_of(out.cards);
  std::size_t out_size = 1;
  for (int c : out.cards) out_size *= static_cast<std::size_t>(c);
  out.values = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(out_size));

  const auto total = static_cast<std::size_t>(product_size);
  std::vector<int> assign(vars.size(), 0);
  std::vector<std::size_t> offset(factors.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    double p = 1.0;
    for (std::size_t f = 0; f < factors.size() && p != 0.0; ++f) {
      p *= factors[f]->values[static_cast<Eigen::Index>(offset[f])];
    }
    std::size_t dst = 0;
    for (std::size_t i = 0, j = 0; i < vars.size(); ++i) {
      if (i == drop) continue;
      dst += static_cast<std::size_t>(assign[i]) * out_strides[j++];
    }
    out.values[static_cast<Eigen::Index>(dst)] += p;

    for (std::size_t i = vars.size(); i-- > 0;) {
      if (++assign[i] < cards[i]) {
        for (std::size_t f = 0; f < factors.size(); ++f) offset[f] += operand_strides[f][i];
        break;
      }
      for (std::size_t f = 0; f < factors.size(); ++f) {
        offset[f] -= operand_strides[f][i] * static_cast<std::size_t>(cards[i] - 1);
      }
      assign[i] = 0;
    }
  }
  return out;
}

std::vector<int> min_degree_order(const std::vector<std::vector<int>>& scopes, const std::set<int>& hidden) {
  std::map<int, std::set<int>> adj;
  for (const auto& scope : scopes) {
    for (int a : scope) {
      adj[a];
      for (int b : scope) {
        if (a != b) adj[a].insert(b);
      }
    }
  }
  std::set<int> remaining = hidden;
  std::vector<int> order;
  while (!remaining.empty()) {
    int best = -1;
    std::size_t best_degree = 0;
    for (int v : remaining) {  // ascending index = lexicographic id
      const std::size_t degree = adj[v].size();
      if (best < 0 || degree < best_degree) {
        best = v;
        best_degree = degree;
      }
    }
    const std::set<int> neighbours = adj[best];
    for (int a : neighbours) {
      adj[a].erase(best);
      for (int b : neighbours) {
        if (a != b) adj[a].insert(b);
      }
    }
    adj.erase(best);
    remaining.erase(best);
    order.push_back(best);
  }
  return order;
}

std::set<NodeId> ancestral_closure(const TableNetwork& net, std::set<NodeId> seeds) {
  std::vector<NodeId> stack(seeds.begin(), seeds.end());
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    for (const auto& p : net.nodes.at(id).parents) {
      if (seeds.insert(p).second) stack.push_back(p);
    }
  }
  return seeds;
}

void check_table_evidence(const TableNetwork& net, const Evidence& evidence) {
  for (const auto& [id, state] : evidence.assignments) {
    auto it = net.nodes.find(id);
    if (it == net.nodes.end()) throw InputError("unknown evidence node '" + id.str() + "'");
    if (state < 0 || state >= it->second.domain.size()) {
      throw InputError("evidence state " + std::to_string(state) + " out of range for node '" + id.str() + "'");
    }
  }
}

Vector posterior_by_elimination(const TableNetwork& net, const VarTable& vt, const Evidence& evidence,
                                const NodeId& query, std::size_t cap) {
  std::set<NodeId> seeds{query};
  for (const auto& [id, state] : evidence.assignments) seeds.insert(id);
  const std::set<NodeId> relevant = ancestral_closure(net, seeds);

  std::vector<Factor> factors;
  for (const auto& id : relevant) {
    Factor f = factor_from_table(vt, net.nodes.at(id));
    for (const auto& [eid, state] : evidence.assignments) f = restrict_factor(f, vt.index.at(eid), state);
    factors.push_back(std::move(f));
  }

  const int q = vt.index.at(query);
  std::set<int> hidden;
  for (const auto& id : relevant) {
    if (id != query && !evidence.assignments.count(id)) hidden.insert(vt.index.at(id));
  }
  std::vector<std::vector<int>> scopes;
  for (const auto& f : factors) scopes.push_back(f.vars);

  for (int var : min_degree_order(scopes, hidden)) {
    std::vector<const Factor*> touching;
    std::vector<Factor> rest;
    for (const auto& f : factors) {
      if (std::find(f.vars.begin(), f.vars.end(), var) != f.vars.end()) touching.push_back(&f);
    }
    Factor merged = multiply_and_sum(vt, touching, var, cap);
    for (auto& f : factors) {
      if (std::find(f.vars.begin(), f.vars.end(), var) == f.vars.end()) rest.push_back(std::move(f));
    }
    rest.push_back(std::move(merged));
    factors = std::move(rest);
  }

  std::vector<const Factor*> all;
  for (const auto& f : factors) all.push_back(&f);
  const Factor joint = multiply_and_sum(vt, all, -1, cap);

  const int size = vt.cards[static_cast<std::size_t>(q)];
  Vector posterior = Vector::Zero(size);
  if (auto ev = evidence.assignments.find(query); ev != evidence.assignments.end()) {
    // Query was restricted away; joint is the scalar P(evidence).
    if (!(joint.values.sum() > 0.0)) throw InconsistentEvidenceError("evidence has probability zero");
    posterior[ev->second] = 1.0;
    return posterior;
  }
  for (Eigen::Index x = 0; x < size; ++x) posterior[x] = joint.values[x];
  const double z = posterior.sum();
  if (!(z > 0.0)) throw InconsistentEvidenceError("evidence has probability zero");
  return posterior / z;
}

}  // namespace

std::vector<NodeId> TableNetwork::topological_order() const {
  std::map<NodeId, std::size_t> pending;
  std::map<NodeId, std::vector<NodeId>> kids;
  std::set<NodeId> ready;
  for (const auto& [id, node] : nodes) {
    pending[id] = node.parents.size();
    for (const auto& p : node.parents) kids[p].push_back(id);
    if (node.parents.empty()) ready.insert(id);
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    NodeId id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& k : kids[id]) {
      if (--pending[k] == 0) ready.insert(k);
    }
  }
  if (order.size() != nodes.size()) throw StructuralError("table network contains a cycle");
  return order;
}

TableNetwork tabulate(const Network& net, std::size_t expansion_cap) {
  std::set<NodeId> all;
  for (const auto& [id, node] : net.nodes()) all.insert(id);
  return tabulate(net, all, expansion_cap);
}

TableNetwork tabulate(const Network& net, const std::set<NodeId>& subset, std::size_t expansion_cap) {
  TableNetwork out;
  out.title = net.title();
  for (const auto& id : subset) {
    const Node& node = net.node(id);
    TableNode tn{id, node.domain, {}, {}};
    if (net.is_root(id)) {
      tn.cpt.child_size = node.domain.size();
      tn.cpt.table = net.prior(id).probabilities.array();
    } else {
      const NoisyMaxFamily& fam = net.family(id);
      for (const auto& p : fam.parents) {
        if (!subset.count(p)) throw InputError("tabulated subset is missing parent '" + p.str() + "'");
      }
      tn.parents = fam.parents;
      tn.cpt = expand_cpt(fam, expansion_cap);
    }
    out.nodes.emplace(id, std::move(tn));
  }
  return out;
}

MarginalTable enumerate_joint(const TableNetwork& net, const Evidence& evidence, std::size_t joint_cap) {
  check_table_evidence(net, evidence);
  double space = 1.0;
  for (const auto& [id, node] : net.nodes) space *= node.domain.size();
  if (space > static_cast<double>(joint_cap)) {
    throw CapacityError("joint state space of " + std::to_string(static_cast<unsigned long long>(space)) +
                        " exceeds enumeration cap " + std::to_string(joint_cap));
  }

  const std::vector<NodeId> order = net.topological_order();
  const std::size_t n = order.size();
  std::map<NodeId, std::size_t> position;
  for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;

  struct Slot {
    const TableNode* node;
    std::vector<std::size_t> parent_pos;
    int fixed;  // evidence state or -1
  };
  std::vector<Slot> slots;
  for (const auto& id : order) {
    const TableNode& node = net.nodes.at(id);
    Slot slot{&node, {}, -1};
    for (const auto& p : node.parents) slot.parent_pos.push_back(position.at(p));
    if (auto it = evidence.assignments.find(id); it != evidence.assignments.end()) slot.fixed = it->second;
    slots.push_back(std::move(slot));
  }

  std::vector<Vector> acc;
  for (const auto& s : slots) acc.push_back(Vector::Zero(s.node->domain.size()));
  std::vector<int> state(n, 0);
  std::vector<double> prefix(n + 1, 1.0);
  double total = 0.0;

  // Depth-first over joint states in topological order.
  std::vector<int> next(n, 0);
  std::size_t depth = 0;
  auto first_state = [&](std::size_t k) { return slots[k].fixed >= 0 ? slots[k].fixed : 0; };
  auto last_state = [&](std::size_t k) {
    return slots[k].fixed >= 0 ? slots[k].fixed : slots[k].node->domain.size() - 1;
  };
  if (n == 0) return {};
  next[0] = first_state(0);
  while (true) {
    if (next[depth] > last_state(depth)) {
      if (depth == 0) break;
      --depth;
      continue;
    }
    const Slot& slot = slots[depth];
    state[depth] = next[depth]++;
    std::size_t column = 0;
    for (std::size_t i = 0; i < slot.parent_pos.size(); ++i) {
      column = column * static_cast<std::size_t>(slot.node->cpt.parent_sizes[i]) +
               static_cast<std::size_t>(state[slot.parent_pos[i]]);
    }
    const double p = prefix[depth] * slot.node->cpt(column, state[depth]);
    if (p == 0.0) continue;
    if (depth + 1 == n) {
      total += p;
      for (std::size_t k = 0; k < n; ++k) acc[k][state[k]] += p;
      continue;
    }
    prefix[depth + 1] = p;
    ++depth;
    next[depth] = first_state(depth);
  }

  if (!(total > 0.0)) throw InconsistentEvidenceError("evidence has probability zero");
  MarginalTable out;
  for (std::size_t k = 0; k < n; ++k) out[order[k]] = acc[k] / total;
  return out;
}

MarginalTable enumerate_joint(const Network& net, const Evidence& evidence, std::size_t joint_cap) {
  check_evidence(net, evidence);
  double space = 1.0;
  for (const auto& [id, node] : net.nodes()) space *= node.domain.size();
  if (space > static_cast<double>(joint_cap)) {
    throw CapacityError("joint state space of " + std::to_string(static_cast<unsigned long long>(space)) +
                        " exceeds enumeration cap " + std::to_string(joint_cap));
  }
  return enumerate_joint(tabulate(net), evidence, joint_cap);
}

MarginalTable eliminate(const TableNetwork& net, const Evidence& evidence, const std::set<NodeId>& query,
                        std::size_t factor_cap) {
  check_table_evidence(net, evidence);
  const VarTable vt(net);
  MarginalTable out;
  for (const auto& q : query) {
    if (!net.nodes.count(q)) throw InputError("unknown query node '" + q.str() + "'");
    out[q] = posterior_by_elimination(net, vt, evidence, q, factor_cap);
  }
  return out;
}

MarginalTable eliminate(const Network& net, const Evidence& evidence, const std::set<NodeId>& query,
                        std::size_t factor_cap) {
  check_evidence(net, evidence);
  std::set<NodeId> seeds = query;
  for (const auto& q : query) net.node(q);
  for (const auto& [id, state] : evidence.assignments) seeds.insert(id);
  // Only ancestors of the query and evidence are expanded.
  std::vector<NodeId> stack(seeds.begin(), seeds.end());
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    for (const auto& p : net.parents(id)) {
      if (seeds.insert(p).second) stack.push_back(p);
    }
  }
  return eliminate(tabulate(net, seeds), evidence, query, factor_cap);
}

std::vector<NodeId> elimination_order(const TableNetwork& net, const std::set<NodeId>& hidden) {
  const VarTable vt(net);
  std::vector<std::vector<int>> scopes;
  for (const auto& [id, node] : net.nodes) scopes.push_back(factor_from_table(vt, node).vars);
  std::set<int> vars;
  for (const auto& id : hidden) vars.insert(vt.index.at(id));
  std::vector<NodeId> out;
  for (int v : min_degree_order(scopes, vars)) out.push_back(vt.ids[static_cast<std::size_t>(v)]);
  return out;
}

double compare_marginals(const MarginalTable& a, const MarginalTable& b) {
  if (a.size() != b.size()) throw InputError("marginal tables cover different node sets");
  double worst = 0.0;
  for (const auto& [id, va] : a) {
    auto it = b.find(id);
    if (it == b.end()) throw InputError("node '" + id.str() + "' missing from second marginal table");
    if (it->second.size() != va.size()) throw InputError("domain size mismatch for node '" + id.str() + "'");
    if (va.size() > 0) worst = std::max(worst, (va - it->second).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace nmx
