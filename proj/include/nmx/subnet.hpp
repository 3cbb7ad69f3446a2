#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nmx/inference.hpp"
#include "nmx/model.hpp"

namespace nmx {

// How marginals of removed parents are obtained before folding.
//   root_prior: priors of removed roots, propagated through chains of removed
//               children with marginal_cumulative. Fails when a removed parent
//               has a retained ancestor.
//   exact:      marginals by inference on the full network.
enum class MarginalPolicy { root_prior, exact };

std::string to_string(MarginalPolicy policy);
MarginalPolicy parse_policy(const std::string& name);  // throws InputError

struct ExtractionOptions {
  MarginalPolicy policy = MarginalPolicy::root_prior;
  std::size_t factor_cap = kFactorCap;
};

// An extracted network; its provenance() records the source version, the
// view and every folded parent with the marginal used.
struct Subnetwork {
  Network network;

  const Provenance& provenance() const { return *network.provenance(); }
};

// Closure of the seeds under the relation, then the label filter (seeds are
// exempt). Throws InputError for unknown seeds, EmptyViewError when nothing
// survives.
std::set<NodeId> select_view(const Network& net, const ViewSpec& view);

// Induced subnetwork on `node_set` with removed parents folded into leaks.
Subnetwork extract_subnetwork(const Network& net, const std::set<NodeId>& node_set,
                              const ExtractionOptions& options = {}, std::optional<ViewSpec> view = std::nullopt);

// leak[x] * prod_{removed} sum_d P(D = d) c[i][d][x].
CumulativeVector fold_leak(const NoisyMaxFamily& family, const std::set<NodeId>& removed,
                           const std::map<NodeId, Vector>& removed_marginals);

struct HierarchyReport {
  bool is_hierarchical = true;
  std::vector<Arc> offending_arcs;
};

// Levels come from "level:k" labels where present, else level_assignment.
// Arcs between nodes on the same level are flagged.
HierarchyReport check_hierarchical(const Network& net);

// Max deviation of retained-node prior marginals between the full network and
// the extraction for `view`, both by enumeration.
double soundness_audit(const Network& net, const ViewSpec& view, const ExtractionOptions& options = {});

}  // namespace nmx
