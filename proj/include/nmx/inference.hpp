#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "nmx/model.hpp"
#include "nmx/noisymax.hpp"

namespace nmx {

// A node with its explicit conditional table. Roots carry a single column
// holding the prior.
struct TableNode {
  NodeId id;
  OrderedDomain domain;
  std::vector<NodeId> parents;
  Cpt cpt;
};

// Network of explicit tables, the form inference runs on. Built from a
// noisy-MAX network by tabulate() or read from an expanded export.
struct TableNetwork {
  std::string title;
  std::map<NodeId, TableNode> nodes;

  std::vector<NodeId> topological_order() const;  // throws StructuralError
};

// Expands every family (or only those in `subset`, which must be closed under
// parents). Throws CapacityError naming the node whose table is too large.
TableNetwork tabulate(const Network& net, std::size_t expansion_cap = kDefaultExpansionCap);
TableNetwork tabulate(const Network& net, const std::set<NodeId>& subset,
                      std::size_t expansion_cap = kDefaultExpansionCap);

using MarginalTable = std::map<NodeId, Vector>;

inline constexpr std::size_t kJointCap = 10'000'000;
inline constexpr std::size_t kFactorCap = std::size_t{1} << 24;

// Exact posteriors of every node by summing the full joint.
MarginalTable enumerate_joint(const TableNetwork& net, const Evidence& evidence, std::size_t joint_cap = kJointCap);
MarginalTable enumerate_joint(const Network& net, const Evidence& evidence, std::size_t joint_cap = kJointCap);

// Exact posteriors of the query nodes by variable elimination (min-degree
// order, ties by id). Nodes that are not ancestors of the query or evidence
// are pruned first.
MarginalTable eliminate(const TableNetwork& net, const Evidence& evidence, const std::set<NodeId>& query,
                        std::size_t factor_cap = kFactorCap);
MarginalTable eliminate(const Network& net, const Evidence& evidence, const std::set<NodeId>& query,
                        std::size_t factor_cap = kFactorCap);

// Order in which eliminate() removes `hidden` given the factors of `net`.
std::vector<NodeId> elimination_order(const TableNetwork& net, const std::set<NodeId>& hidden);

// max |a - b| over all entries. Throws InputError on mismatched nodes/domains.
double compare_marginals(const MarginalTable& a, const MarginalTable& b);

}  // namespace nmx
