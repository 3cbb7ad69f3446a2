#include <gtest/gtest.h>

#include <thread>

#include "nmx/generator.hpp"
#include "nmx/io.hpp"
#include "nmx/service.hpp"
#include "nmx/subnet.hpp"

// After Eigen: resolv.h defines _res.
#include <httplib.h>

using namespace nmx;

namespace {

Json body(const HttpResponse& r) { return parse_json(r.body); }

class ServiceTest : public ::testing::Test {
 protected:
  WorkbenchService service;
  Network net = gen_random(GeneratorParams::preset("tiny", 4));
  std::string id;
  std::string version;

  void SetUp() override {
    const auto r = service.handle("POST", "/networks", {}, save_network(net));
    ASSERT_EQ(r.status, 201) << r.body;
    id = body(r)["id"];
    version = body(r)["version"];
  }

  std::string path(const std::string& rest) const { return "/networks/" + id + rest; }

  NodeId some_child() const { return net.families().begin()->first; }
};

}  // namespace

TEST_F(ServiceTest, UploadListGraph) {
  EXPECT_EQ(version, version_id(net));
  const auto list = body(service.handle("GET", "/networks", {}, ""));
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["nodes"], net.size());
  const auto g = service.handle("GET", path("/graph"), {}, "");
  ASSERT_EQ(g.status, 200);
  EXPECT_EQ(body(g)["version"], version);
  EXPECT_EQ(body(g)["arcs"].size(), net.arc_count());
}

TEST_F(ServiceTest, ErrorStatuses) {
  EXPECT_EQ(service.handle("GET", "/networks/n99/graph", {}, "").status, 404);
  EXPECT_EQ(service.handle("GET", path("/graph"), {{"version", "deadbeef"}}, "").status, 404);
  EXPECT_EQ(service.handle("POST", "/networks", {}, "{").status, 400);
  EXPECT_EQ(service.handle("POST", "/networks", {}, R"({"format": "nmx-net"})").status, 400);
  EXPECT_EQ(service.handle("POST", path("/view"), {}, R"({"seeds": ["nope"], "relation": "ancestors"})").status, 400);
  EXPECT_EQ(service.handle("DELETE", path("/graph"), {}, "").status, 404);
  EXPECT_EQ(service.handle("GET", path("/export"), {{"format", "bif"}}, "").status, 400);
  WorkbenchService small({"127.0.0.1", 0, 2, kFactorCap});
  small.handle("POST", "/networks", {}, save_network(net));
  EXPECT_EQ(small.handle("GET", "/networks/n1/export", {{"format", "expanded"}}, "").status, 507);
}

TEST_F(ServiceTest, ViewReturnsNodesAndLayout) {
  const NodeId c = some_child();
  const auto r = service.handle("POST", path("/view"), {}, Json{{"seeds", {c.str()}}, {"relation", "markov_blanket"}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto expected = select_view(net, ViewSpec{{c}, Relation::markov_blanket, std::nullopt, true});
  EXPECT_EQ(body(r)["nodes"].size(), expected.size());
  EXPECT_EQ(body(r)["layout"]["nodes"].size(), expected.size());
  EXPECT_EQ(body(r)["version"], version);
}

TEST_F(ServiceTest, LeakEditCreatesVersion) {
  const NodeId c = some_child();
  const int s = net.node(c).domain.size();
  Json leak = Json::array();
  for (int x = 0; x + 1 < s; ++x) leak.push_back(0.9);
  leak.push_back(1.0);
  const auto r = service.handle("PATCH", path("/nodes/" + c.str() + "/leak"), {}, Json{{"base", version}, {"leak", leak}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const std::string v2 = body(r)["version"];
  EXPECT_NE(v2, version);
  EXPECT_EQ(body(r)["annotation"]["nodes"][c.str()], "changed");

  // Old version stays readable; the stale base is refused.
  EXPECT_EQ(service.handle("GET", path("/graph"), {{"version", version}}, "").status, 200);
  const auto stale = service.handle("PATCH", path("/nodes/" + c.str() + "/leak"), {}, Json{{"base", version}, {"leak", leak}}.dump());
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(body(stale)["current"], v2);

  const auto d = service.handle("GET", path("/diff/" + version + "/" + v2), {}, "");
  ASSERT_EQ(d.status, 200);
  EXPECT_EQ(body(d)["nodes"][c.str()], "changed");
  EXPECT_EQ(body(d)["nodes"][net.roots().begin()->first.str()], "unchanged");
}

TEST_F(ServiceTest, InvalidLeakIs422WithReport) {
  const NodeId c = some_child();
  const int s = net.node(c).domain.size();
  Json leak = Json::array();
  for (int x = 0; x + 1 < s; ++x) leak.push_back(0.9 - 0.5 * x);
  leak.push_back(0.9);
  const auto r = service.handle("PATCH", path("/nodes/" + c.str() + "/leak"), {}, Json{{"base", version}, {"leak", leak}}.dump());
  ASSERT_EQ(r.status, 422) << r.body;
  EXPECT_FALSE(body(r)["valid"].get<bool>());
  EXPECT_FALSE(body(r)["violations"].empty());
  EXPECT_EQ(body(service.handle("GET", path("/graph"), {}, ""))["version"], version);
}

TEST_F(ServiceTest, ExtractCreatesLineageWithProvenance) {
  const NodeId c = some_child();
  const auto r = service.handle("POST", path("/extract"), {},
                                Json{{"seeds", {c.str()}}, {"relation", "markov_blanket"}, {"policy", "exact"}}.dump());
  ASSERT_EQ(r.status, 201) << r.body;
  const std::string sub_id = body(r)["id"];
  EXPECT_NE(sub_id, id);
  const auto exported = service.handle("GET", "/networks/" + sub_id + "/export", {}, "");
  const Network sub = load_network(exported.body);
  ASSERT_TRUE(sub.provenance());
  EXPECT_EQ(sub.provenance()->source_version, version);
  EXPECT_EQ(sub.provenance()->policy, "exact");
}

TEST_F(ServiceTest, InferMatchesLibraryAndExportRoundTrips) {
  const NodeId leafish = net.families().rbegin()->first;
  const auto r = service.handle("POST", path("/infer"), {}, Json{{"evidence", {{leafish.str(), 1}}}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto exported = service.handle("GET", path("/export"), {}, "");
  EXPECT_EQ(exported.body, save_network(net));
  const Network loaded = load_network(exported.body);
  const Evidence ev{{{leafish, 1}}};
  EXPECT_EQ(r.body, canonical_dump(inference_report(loaded, ev, {})));
  const auto expanded = service.handle("GET", path("/export"), {{"format", "expanded"}}, "");
  EXPECT_EQ(expanded.body, export_expanded(net));
}

TEST(ServiceHttp, ServesOverLoopback) {
  WorkbenchService service({"127.0.0.1", 0, kDefaultExpansionCap, kFactorCap});
  const int port = service.bind();
  std::thread server([&] { service.run(); });
  httplib::Client client("127.0.0.1", port);
  const Network net = gen_random(GeneratorParams::preset("tiny", 8));
  auto up = client.Post("/networks", save_network(net), "application/json");
  ASSERT_TRUE(up);
  EXPECT_EQ(up->status, 201);
  const std::string version = parse_json(up->body)["version"];
  auto graph = client.Get("/networks/n1/graph?version=" + version);
  ASSERT_TRUE(graph);
  EXPECT_EQ(graph->status, 200);
  const NodeId c = net.families().begin()->first;
  Json leak = Json::array();
  for (int x = 0; x + 1 < net.node(c).domain.size(); ++x) leak.push_back(0.95);
  leak.push_back(1.0);
  auto patch = client.Patch("/networks/n1/nodes/" + c.str() + "/leak", Json{{"base", version}, {"leak", leak}}.dump(),
                            "application/json");
  ASSERT_TRUE(patch);
  EXPECT_EQ(patch->status, 200);
  auto missing = client.Get("/networks/n7/graph");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  service.stop();
  server.join();
}

TEST(ServiceConcurrency, ParallelEditsSerialize) {
  WorkbenchService service;
  const Network net = gen_random(GeneratorParams::preset("tiny", 2));
  const std::string version = parse_json(service.handle("POST", "/networks", {}, save_network(net)).body)["version"];
  const NodeId c = net.families().begin()->first;
  std::vector<int> statuses(8);
  std::vector<std::thread> workers;
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&, i] {
      Json leak = Json::array();
      for (int x = 0; x + 1 < net.node(c).domain.size(); ++x) leak.push_back(0.9 + 0.01 * i);
      leak.push_back(1.0);
      statuses[static_cast<std::size_t>(i)] =
          service.handle("PATCH", "/networks/n1/nodes/" + c.str() + "/leak", {}, Json{{"base", version}, {"leak", leak}}.dump())
              .status;
      service.handle("POST", "/networks/n1/infer", {}, "{}");
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(std::count(statuses.begin(), statuses.end(), 200), 1);
  EXPECT_EQ(std::count(statuses.begin(), statuses.end(), 409), 7);
}
