#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "srnn/error.hpp"
#include "srnn/stgraph.hpp"
#include "support.hpp"

using namespace srnn;
using namespace srnn::stgraph;
using Names = std::vector<std::pair<std::string, std::string>>;

namespace {

RoadNetwork path_network(const std::vector<std::string>& ids) {
  RoadNetwork net;
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) net.add_link(ids[i], ids[i + 1]);
  return net;
}

// All-pairs hop distances by Floyd-Warshall; kInf marks unreachable pairs.
constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 4;

std::vector<std::vector<std::size_t>> floyd_warshall(const RoadNetwork& net) {
  const std::vector<std::string> ids(net.segments().begin(), net.segments().end());
  const std::size_t n = ids.size();
  auto idx = [&](const std::string& s) { return std::lower_bound(ids.begin(), ids.end(), s) - ids.begin(); };
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [a, b] : net.links()) d[idx(a)][idx(b)] = d[idx(b)][idx(a)] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

RoadNetwork random_network(std::mt19937_64& rng, std::size_t n, double p) {
  RoadNetwork net;
  std::bernoulli_distribution link(p);
  for (std::size_t i = 0; i < n; ++i) net.add_segment("s" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (link(rng)) net.add_link("s" + std::to_string(i), "s" + std::to_string(j));
  return net;
}

}  // namespace

TEST_SUITE("stgraph") {

TEST_CASE("hop distance basics") {
  const auto net = path_network({"A", "B", "C"});
  CHECK(hop_distance(net, "A", "A") == 0u);
  CHECK(hop_distance(net, "A", "C") == 2u);
  CHECK(hop_distance(net, "C", "A") == 2u);

  RoadNetwork split = net;
  split.add_link("X", "Y");
  CHECK_FALSE(hop_distance(split, "A", "X").has_value());
}

TEST_CASE("self-links are rejected") {
  RoadNetwork net;
  CHECK_THROWS_AS(net.add_link("A", "A"), InputError);
}

TEST_CASE("hop distance agrees with Floyd-Warshall and is a metric") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::uniform_real_distribution<double> density(0.05, 0.5);
  for (int trial = 0; trial < 60; ++trial) {
    const auto net = random_network(rng, size(rng), density(rng));
    const auto d = floyd_warshall(net);
    const std::vector<std::string> ids(net.segments().begin(), net.segments().end());
    const std::size_t n = ids.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto h = hop_distance(net, ids[i], ids[j]);
        if (d[i][j] == kInf) {
          CHECK_FALSE(h.has_value());
          continue;
        }
        REQUIRE(h.has_value());
        CHECK(*h == d[i][j]);
        CHECK(hop_distance(net, ids[j], ids[i]) == h);
        CHECK((*h == 0) == (i == j));
        for (std::size_t k = 0; k < n; ++k) {
          const auto a = hop_distance(net, ids[i], ids[k]);
          const auto b = hop_distance(net, ids[k], ids[j]);
          if (a && b) CHECK(*h <= *a + *b);
        }
      }
    }
  }
}

TEST_CASE("chain A-B-C with sensors A and C pairs them") {
  const auto g = build_spatial_graph(path_network({"A", "B", "C"}), {"A", "C"});
  CHECK(g.nodes() == std::vector<std::string>{"A", "C"});
  CHECK(g.spatial_edge_names() == Names{{"A", "C"}, {"C", "A"}});
  CHECK(g.temporal_edges() == std::vector<Edge>{{0, 0}, {1, 1}});
}

TEST_CASE("star leaves are fully paired") {
  RoadNetwork star;
  for (const char* leaf : {"P", "Q", "R"}) star.add_link("H", leaf);
  const auto g = build_spatial_graph(star, {"R", "P", "Q"});
  CHECK(g.nodes() == std::vector<std::string>{"P", "Q", "R"});
  CHECK(g.spatial_edge_names() == Names{{"P", "Q"}, {"P", "R"}, {"Q", "P"}, {"Q", "R"}, {"R", "P"}, {"R", "Q"}});
}

TEST_CASE("path A-E with sensors A, C, D keeps only minimal partners") {
  const auto g = build_spatial_graph(path_network({"A", "B", "C", "D", "E"}), {"A", "C", "D"});
  CHECK(g.spatial_edge_names() == Names{{"A", "C"}, {"C", "A"}, {"C", "D"}, {"D", "C"}});
  CHECK(g.num_nodes() == 3);
  CHECK(g.temporal_edges().size() == 3);
}

TEST_CASE("selection is symmetrized even when the partner prefers someone else") {
  // D's nearest sensor is C (2 hops); C's nearest is B (1 hop). D selecting C
  // still creates both directions.
  RoadNetwork net = path_network({"B", "C", "x", "D"});
  const auto g = build_spatial_graph(net, {"B", "C", "D"});
  CHECK(g.spatial_edge_names() == Names{{"B", "C"}, {"C", "B"}, {"C", "D"}, {"D", "C"}});
}

TEST_CASE("build_spatial_graph errors name the offending sensor") {
  auto net = path_network({"A", "B", "C"});
  try {
    build_spatial_graph(net, {"A", "Z"});
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("Z") != std::string::npos);
  }
  net.add_link("X", "Y");
  try {
    build_spatial_graph(net, {"A", "C", "X"});
    FAIL("expected GraphError");
  } catch (const GraphError& e) {
    CHECK(std::string(e.what()).find("X") != std::string::npos);
  }
}

TEST_CASE("random graphs are symmetric, deterministic and sorted") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    auto net = random_network(rng, 12, 0.25);
    std::vector<std::string> ids(net.segments().begin(), net.segments().end());
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(6);
    SpatioTemporalGraph g;
    try {
      g = build_spatial_graph(net, ids);
    } catch (const GraphError&) {
      continue;
    }
    CHECK(g == build_spatial_graph(net, ids));
    CHECK(std::is_sorted(g.nodes().begin(), g.nodes().end()));
    CHECK(std::is_sorted(g.spatial_edges().begin(), g.spatial_edges().end()));
    std::set<Edge> set(g.spatial_edges().begin(), g.spatial_edges().end());
    for (const auto& e : g.spatial_edges()) {
      CHECK(e.src != e.dst);
      CHECK(set.count(Edge{e.dst, e.src}) == 1);
    }
    CHECK(g.temporal_edges().size() == g.num_nodes());
  }
}

TEST_CASE("spatial edge features") {
  const compute::Array2 speeds = compute::Array2::from_rows({{0.5, 0.0}, {0.3, 0.0}});
  CHECK(spatial_edge_feature(speeds, 0, {0, 1}) == std::array<double, 2>{0.5, 0.3});
  CHECK(spatial_edge_feature(speeds, 0, {1, 0}) == std::array<double, 2>{0.3, 0.5});
  CHECK(spatial_edge_feature(speeds, 1, {0, 1}) == std::array<double, 2>{0.0, 0.0});
  CHECK_THROWS_AS(spatial_edge_feature(speeds, 2, {0, 1}), IndexError);
}

TEST_CASE("spatial features of reversed edges are swapped copies") {
  std::mt19937_64 rng(4);
  const auto speeds = testing::random_array(4, 30, rng, 0.0, 1.0);
  for (std::size_t t = 0; t < 30; ++t) {
    for (std::size_t u = 0; u < 4; ++u) {
      for (std::size_t v = 0; v < 4; ++v) {
        if (u == v) continue;
        auto f = spatial_edge_feature(speeds, t, {u, v});
        std::swap(f[0], f[1]);
        CHECK(f == spatial_edge_feature(speeds, t, {v, u}));
      }
    }
  }
}

TEST_CASE("temporal edge features") {
  const auto speeds = compute::Array2::from_rows({{0.4, 0.6, 0.2, 0.2}, {1.0, 0.0, 0.5, 0.5}});
  CHECK(temporal_edge_feature(speeds, 0, 1) == std::array<double, 2>{0.4, 0.6});
  CHECK(temporal_edge_feature(speeds, 0, 3) == std::array<double, 2>{0.2, 0.2});
  CHECK(temporal_edge_feature(speeds, 1, 1) == std::array<double, 2>{1.0, 0.0});
  CHECK_THROWS_AS(temporal_edge_feature(speeds, 0, 0), IndexError);
  CHECK_THROWS_AS(temporal_edge_feature(speeds, 0, 4), IndexError);
}

TEST_CASE("incident spatial edges route by destination") {
  const auto pair = build_spatial_graph(path_network({"A", "B", "C"}), {"A", "C"});
  CHECK(incident_spatial_edges(pair, "A") == std::vector<Edge>{{1, 0}});

  RoadNetwork star;
  for (const char* leaf : {"P", "Q", "R"}) star.add_link("H", leaf);
  const auto full = build_spatial_graph(star, {"P", "Q", "R"});
  CHECK(incident_spatial_edges(full, "P") == std::vector<Edge>{{1, 0}, {2, 0}});
  CHECK_THROWS_AS(incident_spatial_edges(full, "H"), InputError);

  const auto lonely = SpatioTemporalGraph::from_edges({"A", "B"}, {});
  CHECK(incident_spatial_edges(lonely, "A").empty());
}

TEST_CASE("from_edges validation") {
  CHECK_THROWS_AS(SpatioTemporalGraph::from_edges({"A", "A"}, {}), GraphError);
  CHECK_THROWS_AS(SpatioTemporalGraph::from_edges({"A", "B"}, {{"A", "B"}}), GraphError);
  CHECK_THROWS_AS(SpatioTemporalGraph::from_edges({"A", "B"}, {{"A", "A"}}), GraphError);
  CHECK_THROWS_AS(SpatioTemporalGraph::from_edges({"A", "B"}, {{"A", "Q"}, {"Q", "A"}}), GraphError);
  const auto g = SpatioTemporalGraph::from_edges({"B", "A"}, {{"B", "A"}, {"A", "B"}});
  CHECK(g.nodes() == std::vector<std::string>{"A", "B"});
  CHECK(g.spatial_edge_names() == Names{{"A", "B"}, {"B", "A"}});
}

TEST_CASE("grid network") {
  const auto net = grid_network(2, 3);
  CHECK(net.segments().size() == 6);
  CHECK(net.links().size() == 7);
  CHECK(hop_distance(net, "r0c0", "r1c2") == 3u);
}

TEST_CASE("files round trip") {
  testing::TempDir dir("stgraph");
  {
    std::ofstream f(dir / "net.txt");
    f << "# comment line\nA B\n  B   C  # trailing\n\nD\n";
  }
  const auto net = read_network(dir / "net.txt");
  CHECK(net.segments() == std::set<std::string>{"A", "B", "C", "D"});
  CHECK(net.links().size() == 2);
  write_network(net, dir / "net2.txt");
  const auto again = read_network(dir / "net2.txt");
  CHECK(again.segments() == net.segments());
  CHECK(again.links() == net.links());

  write_sensors({"C", "A"}, dir / "sensors.txt");
  CHECK(read_sensors(dir / "sensors.txt") == std::vector<std::string>{"C", "A"});

  const auto g = build_spatial_graph(net, {"A", "C"});
  write_graph(g, dir / "g.json");
  CHECK(read_graph(dir / "g.json") == g);
  CHECK(graph_from_json(graph_to_json(g)) == g);
  CHECK_THROWS(graph_from_json("{\"nodes\": [\"A\"], \"spatial_edges\": [[\"A\", \"B\"]]}"));
  CHECK_THROWS(read_network(dir / "missing.txt"));
}

TEST_CASE("network file with three tokens is rejected") {
  testing::TempDir dir("stgraph_bad");
  {
    std::ofstream f(dir / "net.txt");
    f << "A B C\n";
  }
  CHECK_THROWS_AS(read_network(dir / "net.txt"), ParseError);
}

}  // TEST_SUITE
