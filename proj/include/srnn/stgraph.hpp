#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "srnn/compute/array.hpp"

namespace srnn::stgraph {

using SegmentId = std::string;

// Physical road connectivity. Links are undirected and stored with the
// lexicographically smaller endpoint first.
class RoadNetwork {
 public:
  RoadNetwork() = default;

  void add_segment(const SegmentId& id);
  // Adds both endpoints if absent. Throws InputError on a self-link.
  void add_link(const SegmentId& a, const SegmentId& b);

  const std::set<SegmentId>& segments() const noexcept { return segments_; }
  const std::set<std::pair<SegmentId, SegmentId>>& links() const noexcept { return links_; }
  bool contains(const SegmentId& id) const { return segments_.count(id) != 0; }

  // Breadth-first hop distances from `source` to every segment, in the
  // order of segments(). nullopt marks unreachable segments.
  std::vector<std::optional<std::size_t>> distances_from(const SegmentId& source) const;

 private:
  std::set<SegmentId> segments_;
  std::set<std::pair<SegmentId, SegmentId>> links_;
};

// Number of links on the shortest path from a to b; nullopt when unreachable.
std::optional<std::size_t> hop_distance(const RoadNetwork& network, const SegmentId& a,
                                        const SegmentId& b);

// Directed edge between two graph nodes, by index into SpatioTemporalGraph::nodes().
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

// Immutable sensor graph: nodes sorted by identifier, directed spatial edges in
// opposite-direction pairs sorted by (source, destination), one temporal
// self-edge per node in node order.
class SpatioTemporalGraph {
 public:
  SpatioTemporalGraph() = default;

  // Validates and canonicalizes. Throws GraphError on duplicate nodes,
  // unknown endpoints, self-edges or unpaired directions.
  static SpatioTemporalGraph from_edges(std::vector<SegmentId> nodes,
                                        const std::vector<std::pair<SegmentId, SegmentId>>& spatial);

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_spatial_edges() const noexcept { return spatial_.size(); }
  const std::vector<SegmentId>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& spatial_edges() const noexcept { return spatial_; }
  std::vector<Edge> temporal_edges() const;

  // Index of `id` in nodes(); InputError if absent.
  std::size_t index_of(const SegmentId& id) const;

  // Indices into spatial_edges() of edges whose destination is node v,
  // ascending by source.
  const std::vector<std::size_t>& incoming(std::size_t v) const { return incoming_.at(v); }

  std::vector<std::pair<SegmentId, SegmentId>> spatial_edge_names() const;

  bool operator==(const SpatioTemporalGraph& other) const {
    return nodes_ == other.nodes_ && spatial_ == other.spatial_;
  }

 private:
  std::vector<SegmentId> nodes_;
  std::vector<Edge> spatial_;
  std::vector<std::vector<std::size_t>> incoming_;
};

// Links every sensor to all other sensors at the minimum hop distance from it,
// then symmetrizes. Throws InputError for unknown sensors and GraphError for a
// sensor that cannot reach any other sensor.
SpatioTemporalGraph build_spatial_graph(const RoadNetwork& network,
                                        const std::vector<SegmentId>& sensors);

// Spatial edges (u, v) with destination v, ascending by source.
std::vector<Edge> incident_spatial_edges(const SpatioTemporalGraph& graph, const SegmentId& v);

// `speeds` is N×T (row = node in graph order, column = time step).
std::array<double, 2> spatial_edge_feature(const compute::Array2& speeds, std::size_t t, Edge edge);
std::array<double, 2> temporal_edge_feature(const compute::Array2& speeds, std::size_t v,
                                            std::size_t t);

// rows × cols grid of segments named "r<row>c<col>" with 4-neighbour links.
RoadNetwork grid_network(std::size_t rows, std::size_t cols);

// Network file: one `segment segment` link per line, `#` starts a comment.
RoadNetwork read_network(const std::filesystem::path& path);
void write_network(const RoadNetwork& network, const std::filesystem::path& path);
// Sensors file: one segment identifier per line.
std::vector<SegmentId> read_sensors(const std::filesystem::path& path);
void write_sensors(const std::vector<SegmentId>& sensors, const std::filesystem::path& path);

std::string graph_to_json(const SpatioTemporalGraph& graph);
SpatioTemporalGraph graph_from_json(const std::string& text);
void write_graph(const SpatioTemporalGraph& graph, const std::filesystem::path& path);
SpatioTemporalGraph read_graph(const std::filesystem::path& path);

}  // namespace srnn::stgraph
