#include <gtest/gtest.h>

#include "nmx/error.hpp"
#include "nmx/generator.hpp"
#include "nmx/io.hpp"
#include "nmx/subnet.hpp"
#include "support.hpp"

using namespace nmx;
using nmx::testing::make_node;

namespace {

NoisyMaxFamily binary(const NodeId& child, std::vector<std::pair<NodeId, double>> parents,
                      CumulativeVector leak = {1.0, 1.0}) {
  NoisyMaxFamily fam{child, {}, {}, std::move(leak)};
  for (const auto& [p, act] : parents) {
    fam.parents.push_back(p);
    fam.activation.push_back({CumulativeVector{1.0 - act, 1.0}});
  }
  return fam;
}

// A -> B -> C, D -> C
Network abcd() {
  return NetworkBuilder()
      .add_root(make_node("A", 2, {"x"}), Vector::Constant(2, 0.5))
      .add_child(make_node("B", 2, {"y"}), binary("B", {{"A", 0.4}}))
      .add_root(make_node("D", 2, {"x"}), Vector::Constant(2, 0.5))
      .add_child(make_node("C", 2, {"y"}), binary("C", {{"B", 0.3}, {"D", 0.6}}))
      .build_validated();
}

ViewSpec view(std::set<NodeId> seeds, Relation r) { return ViewSpec{std::move(seeds), r, std::nullopt, true}; }

}  // namespace

TEST(Select, ChainAncestors) {
  EXPECT_EQ(select_view(abcd(), view({"B"}, Relation::ancestors)), (std::set<NodeId>{"A", "B"}));
}

TEST(Select, MarkovBlanket) {
  EXPECT_EQ(select_view(abcd(), view({"B"}, Relation::markov_blanket)), (std::set<NodeId>{"A", "B", "C", "D"}));
}

TEST(Select, ImmediateNeighbours) {
  EXPECT_EQ(select_view(abcd(), view({"B"}, Relation::immediate_predecessors)), (std::set<NodeId>{"A", "B"}));
  EXPECT_EQ(select_view(abcd(), view({"B"}, Relation::immediate_successors)), (std::set<NodeId>{"B", "C"}));
}

TEST(Select, PredecessorsAndSuccessorsIsUnionOfClosures) {
  nmx::testing::Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = nmx::testing::random_network(rng, 12, 3, 2, 0.25);
    const NodeId seed("v06");
    auto up = select_view(net, view({seed}, Relation::ancestors));
    const auto down = select_view(net, view({seed}, Relation::descendants));
    up.insert(down.begin(), down.end());
    EXPECT_EQ(select_view(net, view({seed}, Relation::predecessors_and_successors)), up);
  }
}

TEST(Select, MonotoneInSeeds) {
  nmx::testing::Rng rng(43);
  const Network net = nmx::testing::random_network(rng, 12, 3, 2, 0.25);
  for (auto r : {Relation::ancestors, Relation::descendants, Relation::predecessors_and_successors}) {
    const auto small = select_view(net, view({"v04"}, r));
    const auto big = select_view(net, view({"v04", "v09"}, r));
    EXPECT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST(Select, LabelFilterExemptsSeeds) {
  ViewSpec v = view({"C"}, Relation::ancestors);
  v.label_filter = std::set<std::string>{"x"};
  EXPECT_EQ(select_view(abcd(), v), (std::set<NodeId>{"A", "C", "D"}));
  v.include_seeds = false;
  EXPECT_EQ(select_view(abcd(), v), (std::set<NodeId>{"A", "D"}));
}

TEST(Select, Errors) {
  EXPECT_THROW(select_view(abcd(), view({"Q"}, Relation::ancestors)), InputError);
  ViewSpec v = view({"A"}, Relation::ancestors);
  v.include_seeds = false;
  EXPECT_THROW(select_view(abcd(), v), EmptyViewError);
}

TEST(Extract, AllNodesIsIdentity) {
  const Network net = abcd();
  std::set<NodeId> all;
  for (const auto& [id, n] : net.nodes()) all.insert(id);
  const auto sub = extract_subnetwork(net, all);
  EXPECT_EQ(sub.network.families(), net.families());
  EXPECT_EQ(sub.network.roots(), net.roots());
  EXPECT_TRUE(sub.provenance().folds.empty());
  EXPECT_EQ(sub.provenance().source_version, version_id(net));
}

TEST(Extract, RemovedRootFoldsIntoLeak) {
  // D3 removed: P(D3=1)=0.5, activation 0.4, leak [1,1] -> [0.8,1].
  const Network net = NetworkBuilder()
                          .add_root(make_node("D1", 2), Vector::Constant(2, 0.5))
                          .add_root(make_node("D3", 2), Vector::Constant(2, 0.5))
                          .add_child(make_node("X", 2), binary("X", {{"D1", 0.7}, {"D3", 0.4}}))
                          .build_validated();
  const auto sub = extract_subnetwork(net, {"D1", "X"});
  const auto& fam = sub.network.family("X");
  EXPECT_EQ(fam.parents, (std::vector<NodeId>{"D1"}));
  EXPECT_NEAR(fam.leak[0], 0.8, 1e-15);
  EXPECT_EQ(fam.leak[1], 1.0);
  ASSERT_EQ(sub.provenance().folds.at("X").size(), 1u);
  EXPECT_EQ(sub.provenance().folds.at("X")[0].parent, NodeId("D3"));
  // Exact marginalization over D3 by enumeration on the source network.
  const auto full = enumerate_joint(net, Evidence{{{"D1", 0}}});
  EXPECT_NEAR(full.at("X")[0], fam.leak[0], 1e-15);
}

TEST(Extract, SingleRetainedParentPattern) {
  // Child with several parents keeps one; the leak absorbs the rest.
  NetworkBuilder b;
  std::vector<std::pair<NodeId, double>> parents;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "d" + std::to_string(i);
    b.add_root(make_node(id, 2), (Vector(2) << 0.9, 0.1).finished());
    parents.emplace_back(NodeId(id), 0.3 + 0.1 * i);
  }
  b.add_child(make_node("h", 2), binary("h", parents, {0.99, 1.0}));
  const Network net = b.build_validated();
  const auto sub = extract_subnetwork(net, {"d2", "h"});
  EXPECT_EQ(sub.network.arcs(), (std::vector<Arc>{{"d2", "h"}}));
  EXPECT_LT(sub.network.family("h").leak[0], 0.99);
  EXPECT_TRUE(validate_network(sub.network).valid());
}

TEST(Extract, RootPriorRefusesRetainedAncestor) {
  // Keeping A and C but dropping B: B's marginal depends on retained A.
  try {
    extract_subnetwork(abcd(), {"A", "C", "D"});
    FAIL() << "expected ExtractionError";
  } catch (const ExtractionError& e) {
    EXPECT_NE(std::string(e.what()).find("'B'"), std::string::npos) << e.what();
  }
  ExtractionOptions exact{MarginalPolicy::exact};
  EXPECT_NO_THROW(extract_subnetwork(abcd(), {"A", "C", "D"}, exact));
}

TEST(Extract, RootPriorPropagatesThroughRemovedChains) {
  const Network net = abcd();
  const auto rp = extract_subnetwork(net, {"C", "D"});
  const auto ex = extract_subnetwork(net, {"C", "D"}, {MarginalPolicy::exact});
  EXPECT_NEAR(rp.network.family("C").leak[0], ex.network.family("C").leak[0], 1e-15);
  EXPECT_EQ(rp.provenance().policy, "root-prior");
  EXPECT_EQ(ex.provenance().policy, "exact");
}

TEST(Fold, EmptyRemovedKeepsLeak) {
  const auto fam = binary("X", {{"A", 0.4}}, {0.7, 1.0});
  EXPECT_EQ(fold_leak(fam, {}, {}), fam.leak);
}

TEST(Fold, FigureSixFactor) {
  const auto fam = binary("X", {{"D3", 0.4}});
  const auto leak = fold_leak(fam, {"D3"}, {{"D3", Vector::Constant(2, 0.5)}});
  EXPECT_NEAR(leak[0], 0.5 + 0.5 * (1 - 0.4), 1e-15);
}

TEST(Fold, OrderIndependent) {
  nmx::testing::Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const auto fam = nmx::testing::random_family(rng, "X", 3, {{"a", 3}, {"b", 2}, {"c", 4}});
    std::map<NodeId, Vector> m{{"a", nmx::testing::random_distribution(rng, 3)},
                               {"b", nmx::testing::random_distribution(rng, 2)},
                               {"c", nmx::testing::random_distribution(rng, 4)}};
    const auto together = fold_leak(fam, {"a", "b", "c"}, m);
    NoisyMaxFamily step = fam;
    step.leak = fold_leak(fam, {"c"}, m);
    const auto sequential = fold_leak(step, {"a", "b"}, m);
    EXPECT_LE((together.values - sequential.values).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Fold, MissingMarginal) {
  const auto fam = binary("X", {{"A", 0.4}});
  EXPECT_THROW(fold_leak(fam, {"A"}, {}), InputError);
}

TEST(Hierarchy, Checks) {
  nmx::testing::Rng rng(53);
  EXPECT_TRUE(check_hierarchical(nmx::testing::two_level_network(rng, 4, 5, 3, 2)).is_hierarchical);
  const Network flat = NetworkBuilder()
                           .add_root(make_node("d1", 2, {"level:0"}), Vector::Constant(2, 0.5))
                           .add_child(make_node("d2", 2, {"level:0"}), binary("d2", {{"d1", 0.5}}))
                           .build_validated();
  const auto report = check_hierarchical(flat);
  EXPECT_FALSE(report.is_hierarchical);
  EXPECT_EQ(report.offending_arcs, (std::vector<Arc>{{"d1", "d2"}}));
  EXPECT_TRUE(check_hierarchical(gen_random(GeneratorParams::preset("cpcs-scale", 1))).is_hierarchical);
}

TEST(Audit, TwoLevelViewsAreSound) {
  nmx::testing::Rng rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    const Network net = nmx::testing::two_level_network(rng, 5, 6, 3, 3);
    for (auto r : {Relation::markov_blanket, Relation::predecessors_and_successors, Relation::immediate_successors}) {
      EXPECT_LE(soundness_audit(net, view({"c0"}, r)), 1e-9);
      EXPECT_LE(soundness_audit(net, view({"r0"}, r)), 1e-9);
    }
  }
}

TEST(Audit, DependentRemovedParentsAreMeasured) {
  // d1 -> d2 (intra-level), both parents of f; keeping only d2's child f and
  // d1 removed while d2 stays breaks independence of the folded parent.
  const Network net = NetworkBuilder()
                          .add_root(make_node("d1", 2, {"level:0"}), (Vector(2) << 0.3, 0.7).finished())
                          .add_child(make_node("d2", 2, {"level:0"}), binary("d2", {{"d1", 0.9}}, {0.9, 1.0}))
                          .add_child(make_node("f", 2, {"level:1"}), binary("f", {{"d1", 0.8}, {"d2", 0.7}}, {0.95, 1.0}))
                          .build_validated();
  ViewSpec v = view({"f"}, Relation::immediate_successors);
  v.seeds = {"d2"};
  const double deviation = soundness_audit(net, v, {MarginalPolicy::exact});
  EXPECT_FALSE(check_hierarchical(net).is_hierarchical);
  EXPECT_GT(deviation, 1e-9);
}
