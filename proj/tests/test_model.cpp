#include <gtest/gtest.h>

#include "nmx/error.hpp"
#include "nmx/model.hpp"
#include "support.hpp"

using namespace nmx;
using nmx::testing::make_node;

namespace {

NoisyMaxFamily binary_family(const NodeId& child, std::vector<std::pair<NodeId, double>> parents,
                             CumulativeVector leak = {1.0, 1.0}) {
  NoisyMaxFamily fam{child, {}, {}, std::move(leak)};
  for (const auto& [p, act] : parents) {
    fam.parents.push_back(p);
    fam.activation.push_back({CumulativeVector{1.0 - act, 1.0}});
  }
  return fam;
}

Network chain() {
  return NetworkBuilder()
      .add_root(make_node("A", 2), Vector::Constant(2, 0.5))
      .add_child(make_node("B", 2), binary_family("B", {{"A", 0.4}}))
      .add_child(make_node("C", 2), binary_family("C", {{"B", 0.7}}))
      .build_validated();
}

}  // namespace

TEST(Validate, WellFormedChainIsEmpty) {
  const auto report = validate_network(chain());
  EXPECT_TRUE(report.valid());
  EXPECT_TRUE(report.violations.empty());
}

TEST(Validate, LeakEndingBelowOne) {
  const Network net = NetworkBuilder()
                          .add_root(make_node("A", 2), Vector::Constant(2, 0.5))
                          .add_child(make_node("B", 2), binary_family("B", {{"A", 0.4}}, {0.5, 0.9}))
                          .build();
  const auto report = validate_network(net);
  ASSERT_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations) {
    if (v.message.find("cumulative vector must end at 1") != std::string::npos) {
      found = true;
      EXPECT_EQ(v.node, NodeId("B"));
    }
  }
  EXPECT_TRUE(found) << report.summary();
}

TEST(Validate, TwoCycleIsNamed) {
  const Network net = NetworkBuilder()
                          .add_child(make_node("A", 2), binary_family("A", {{"B", 0.5}}))
                          .add_child(make_node("B", 2), binary_family("B", {{"A", 0.5}}))
                          .build();
  const auto report = validate_network(net);
  ASSERT_FALSE(report.valid());
  bool found = false;
  for (const auto& v : report.violations) found |= v.message.find("cycle detected: A,B") != std::string::npos;
  EXPECT_TRUE(found) << report.summary();
  EXPECT_THROW(topological_order(net), StructuralError);
  EXPECT_THROW(level_assignment(net), StructuralError);
  EXPECT_EQ(find_cycle(net), (std::vector<NodeId>{"A", "B"}));
}

TEST(Validate, ReportsCoordinates) {
  NoisyMaxFamily fam = binary_family("B", {{"A", 0.4}});
  fam.activation[0][0] = CumulativeVector{0.7, 0.6};
  const Network net = NetworkBuilder().add_root(make_node("A", 2), Vector::Constant(2, 0.5)).add_child(make_node("B", 2), fam).build();
  const auto report = validate_network(net);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].node, NodeId("B"));
  ASSERT_TRUE(report.violations[0].parent);
  EXPECT_EQ(*report.violations[0].parent, NodeId("A"));
  ASSERT_TRUE(report.violations[0].state);
  EXPECT_EQ(*report.violations[0].state, 1);
}

TEST(Validate, PriorAndStructureChecks) {
  NetworkBuilder b;
  b.add_root(make_node("A", 2), (Vector(2) << 0.5, 0.6).finished());
  b.add_child(make_node("B", 2), binary_family("B", {{"Z", 0.4}}));
  const auto report = validate_network(b.build());
  EXPECT_FALSE(report.valid());
  EXPECT_GE(report.violations.size(), 2u);
  EXPECT_THROW(b.build_validated(), ValidationError);
}

TEST(Validate, SingleStateDomainRejected) {
  const Network net = NetworkBuilder().add_root(make_node("A", 1), Vector::Ones(1)).build();
  EXPECT_FALSE(validate_network(net).valid());
}

TEST(Validate, IdempotentAndPure) {
  NoisyMaxFamily fam = binary_family("B", {{"A", 0.4}}, {0.5, 0.9});
  const Network net = NetworkBuilder().add_root(make_node("A", 2), Vector::Constant(2, 0.5)).add_child(make_node("B", 2), fam).build();
  EXPECT_EQ(validate_network(net), validate_network(net));
}

TEST(Validate, NonAccumulatingCurveIsOnlyAWarning) {
  NoisyMaxFamily fam{"B", {"A"}, {{CumulativeVector{0.2, 1.0}, CumulativeVector{0.6, 1.0}}}, {1.0, 1.0}};
  const Network net = NetworkBuilder().add_root(make_node("A", 3), Vector::Constant(3, 1.0 / 3)).add_child(make_node("B", 2), fam).build();
  const auto report = validate_network(net);
  EXPECT_TRUE(report.valid());
  EXPECT_FALSE(report.warnings.empty());
}

TEST(Topology, ChainDiamondSingleton) {
  EXPECT_EQ(topological_order(chain()), (std::vector<NodeId>{"A", "B", "C"}));
  const Network diamond = NetworkBuilder()
                              .add_root(make_node("A", 2), Vector::Constant(2, 0.5))
                              .add_child(make_node("C", 2), binary_family("C", {{"A", 0.5}}))
                              .add_child(make_node("B", 2), binary_family("B", {{"A", 0.5}}))
                              .add_child(make_node("D", 2), binary_family("D", {{"C", 0.5}, {"B", 0.5}}))
                              .build_validated();
  EXPECT_EQ(topological_order(diamond), (std::vector<NodeId>{"A", "B", "C", "D"}));
  const Network single = NetworkBuilder().add_root(make_node("X", 2), Vector::Constant(2, 0.5)).build_validated();
  EXPECT_EQ(topological_order(single), (std::vector<NodeId>{"X"}));
}

TEST(Topology, LevelsAreLongestPaths) {
  const auto chain_levels = level_assignment(chain());
  EXPECT_EQ(chain_levels.at("A"), 0);
  EXPECT_EQ(chain_levels.at("B"), 1);
  EXPECT_EQ(chain_levels.at("C"), 2);
  const Network skip = NetworkBuilder()
                           .add_root(make_node("A", 2), Vector::Constant(2, 0.5))
                           .add_child(make_node("B", 2), binary_family("B", {{"A", 0.5}}))
                           .add_child(make_node("C", 2), binary_family("C", {{"A", 0.5}, {"B", 0.5}}))
                           .build_validated();
  EXPECT_EQ(level_assignment(skip).at("C"), 2);
}

TEST(Topology, RandomNetsRespectArcs) {
  nmx::testing::Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = nmx::testing::random_network(rng, 10, 3, 3, 0.3);
    const auto order = topological_order(net);
    ASSERT_EQ(order.size(), net.size());
    std::map<NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    const auto levels = level_assignment(net);
    for (const auto& [p, c] : net.arcs()) {
      EXPECT_LT(pos[p], pos[c]);
      EXPECT_GT(levels.at(c), levels.at(p));
    }
  }
}

TEST(Model, ChildrenAndArcsAreSorted) {
  const Network net = chain();
  EXPECT_EQ(net.children("A"), (std::vector<NodeId>{"B"}));
  EXPECT_EQ(net.arc_count(), 2u);
  EXPECT_EQ(net.arcs().front(), (Arc{"A", "B"}));
  EXPECT_THROW(net.node("Q"), InputError);
}

TEST(Model, EvidenceChecks) {
  const Network net = chain();
  EXPECT_NO_THROW(check_evidence(net, Evidence{{{"A", 1}}}));
  EXPECT_THROW(check_evidence(net, Evidence{{{"A", 2}}}), InputError);
  EXPECT_THROW(check_evidence(net, Evidence{{{"Q", 0}}}), InputError);
}

TEST(Model, RelationNames) {
  EXPECT_EQ(parse_relation("markov_blanket"), Relation::markov_blanket);
  EXPECT_EQ(parse_relation("predecessors"), Relation::ancestors);
  EXPECT_EQ(to_string(Relation::predecessors_and_successors), "predecessors_and_successors");
  EXPECT_THROW(parse_relation("cousins"), InputError);
}
