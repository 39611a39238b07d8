#include "srnn/stgraph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "srnn/error.hpp"

namespace srnn::stgraph {

using nlohmann::json;

void RoadNetwork::add_segment(const SegmentId& id) {
  if (id.empty()) throw InputError("empty segment identifier");
  segments_.insert(id);
}

void RoadNetwork::add_link(const SegmentId& a, const SegmentId& b) {
  if (a == b) throw InputError("self-link on segment '" + a + "'");
  add_segment(a);
  add_segment(b);
  links_.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
}

std::vector<std::optional<std::size_t>> RoadNetwork::distances_from(const SegmentId& source) const {
  std::map<SegmentId, std::size_t> index;
  for (const auto& s : segments_) index.emplace(s, index.size());
  const auto src = index.find(source);
  if (src == index.end()) throw InputError("unknown segment '" + source + "'");

  std::vector<std::vector<std::size_t>> adj(index.size());
  for (const auto& [a, b] : links_) {
    adj[index[a]].push_back(index[b]);
    adj[index[b]].push_back(index[a]);
  }

  std::vector<std::optional<std::size_t>> dist(index.size());
  std::queue<std::size_t> frontier;
  dist[src->second] = 0;
  frontier.push(src->second);
  while (!frontier.empty()) {
    const std::size_t node = frontier.front();
    frontier.pop();
    for (std::size_t next : adj[node]) {
      if (!dist[next]) {
        dist[next] = *dist[node] + 1;
        frontier.push(next);
      }
    }
  }
  return dist;
}

std::optional<std::size_t> hop_distance(const RoadNetwork& network, const SegmentId& a,
                                        const SegmentId& b) {
  if (!network.contains(b)) throw InputError("unknown segment '" + b + "'");
  const auto dist = network.distances_from(a);
  const auto pos = std::distance(network.segments().begin(), network.segments().find(b));
  return dist[static_cast<std::size_t>(pos)];
}

SpatioTemporalGraph SpatioTemporalGraph::from_edges(
    std::vector<SegmentId> nodes, const std::vector<std::pair<SegmentId, SegmentId>>& spatial) {
  std::sort(nodes.begin(), nodes.end());
  if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
    throw GraphError("duplicate node '" + *std::adjacent_find(nodes.begin(), nodes.end()) + "'");
  }

  SpatioTemporalGraph g;
  g.nodes_ = std::move(nodes);
  std::set<Edge> edges;
  for (const auto& [u, v] : spatial) {
    if (u == v) throw GraphError("spatial self-edge on '" + u + "'");
    const auto iu = std::lower_bound(g.nodes_.begin(), g.nodes_.end(), u);
    const auto iv = std::lower_bound(g.nodes_.begin(), g.nodes_.end(), v);
    if (iu == g.nodes_.end() || *iu != u) throw GraphError("edge endpoint '" + u + "' is not a node");
    if (iv == g.nodes_.end() || *iv != v) throw GraphError("edge endpoint '" + v + "' is not a node");
    edges.insert(Edge{static_cast<std::size_t>(iu - g.nodes_.begin()),
                      static_cast<std::size_t>(iv - g.nodes_.begin())});
  }
  for (const Edge& e : edges) {
    if (!edges.count(Edge{e.dst, e.src})) {
      throw GraphError("spatial edge (" + g.nodes_[e.src] + ", " + g.nodes_[e.dst] +
                       ") has no opposite-direction pair");
    }
  }
  g.spatial_.assign(edges.begin(), edges.end());
  g.incoming_.assign(g.nodes_.size(), {});
  for (std::size_t i = 0; i < g.spatial_.size(); ++i) g.incoming_[g.spatial_[i].dst].push_back(i);
  return g;
}

std::vector<Edge> SpatioTemporalGraph::temporal_edges() const {
  std::vector<Edge> out;
  out.reserve(nodes_.size());
  for (std::size_t v = 0; v < nodes_.size(); ++v) out.push_back(Edge{v, v});
  return out;
}

std::size_t SpatioTemporalGraph::index_of(const SegmentId& id) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end() || *it != id) throw InputError("unknown node '" + id + "'");
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::vector<std::pair<SegmentId, SegmentId>> SpatioTemporalGraph::spatial_edge_names() const {
  std::vector<std::pair<SegmentId, SegmentId>> out;
  out.reserve(spatial_.size());
  for (const Edge& e : spatial_) out.emplace_back(nodes_[e.src], nodes_[e.dst]);
  return out;
}

SpatioTemporalGraph build_spatial_graph(const RoadNetwork& network,
                                        const std::vector<SegmentId>& sensors) {
  std::vector<SegmentId> nodes = sensors;
  std::sort(nodes.begin(), nodes.end());
  for (const auto& s : nodes) {
    if (!network.contains(s)) throw InputError("unknown sensor segment '" + s + "'");
  }
  if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
    throw InputError("duplicate sensor '" + *std::adjacent_find(nodes.begin(), nodes.end()) + "'");
  }

  std::map<SegmentId, std::size_t> segment_pos;
  for (const auto& s : network.segments()) segment_pos.emplace(s, segment_pos.size());

  std::vector<std::pair<SegmentId, SegmentId>> pairs;
  for (const auto& v : nodes) {
    const auto dist = network.distances_from(v);
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& u : nodes) {
      if (u == v) continue;
      const auto d = dist[segment_pos[u]];
      if (d && *d < best) best = *d;
    }
    if (best == std::numeric_limits<std::size_t>::max()) {
      throw GraphError("sensor '" + v + "' cannot reach any other sensor");
    }
    for (const auto& u : nodes) {
      if (u == v) continue;
      const auto d = dist[segment_pos[u]];
      if (d && *d == best) {
        pairs.emplace_back(v, u);
        pairs.emplace_back(u, v);
      }
    }
  }
  return SpatioTemporalGraph::from_edges(std::move(nodes), pairs);
}

std::vector<Edge> incident_spatial_edges(const SpatioTemporalGraph& graph, const SegmentId& v) {
  std::vector<Edge> out;
  for (std::size_t i : graph.incoming(graph.index_of(v))) out.push_back(graph.spatial_edges()[i]);
  return out;
}

std::array<double, 2> spatial_edge_feature(const compute::Array2& speeds, std::size_t t, Edge edge) {
  if (t >= speeds.cols()) {
    throw IndexError("time step " + std::to_string(t) + " out of range [0, " +
                     std::to_string(speeds.cols()) + ")");
  }
  if (edge.src >= speeds.rows() || edge.dst >= speeds.rows()) throw IndexError("edge endpoint out of range");
  return {speeds(edge.src, t), speeds(edge.dst, t)};
}

std::array<double, 2> temporal_edge_feature(const compute::Array2& speeds, std::size_t v,
                                            std::size_t t) {
  if (t == 0) throw IndexError("temporal feature at step 0 has no predecessor");
  if (t >= speeds.cols()) {
    throw IndexError("time step " + std::to_string(t) + " out of range [1, " +
                     std::to_string(speeds.cols()) + ")");
  }
  if (v >= speeds.rows()) throw IndexError("node index out of range");
  return {speeds(v, t - 1), speeds(v, t)};
}

RoadNetwork grid_network(std::size_t rows, std::size_t cols) {
  RoadNetwork net;
  auto name = [](std::size_t r, std::size_t c) {
    return "r" + std::to_string(r) + "c" + std::to_string(c);
  };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      net.add_segment(name(r, c));
      if (r + 1 < rows) net.add_link(name(r, c), name(r + 1, c));
      if (c + 1 < cols) net.add_link(name(r, c), name(r, c + 1));
    }
  }
  return net;
}

namespace {

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

std::string read_all(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

RoadNetwork read_network(const std::filesystem::path& path) {
  auto in = open_input(path);
  RoadNetwork net;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(strip_comment(line));
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() == 1) {
      net.add_segment(tokens[0]);
    } else if (tokens.size() == 2) {
      if (tokens[0] == tokens[1]) throw ParseError("self-link on '" + tokens[0] + "'", lineno);
      net.add_link(tokens[0], tokens[1]);
    } else {
      throw ParseError("expected 'segment segment', got " + std::to_string(tokens.size()) + " fields",
                       lineno);
    }
  }
  return net;
}

void write_network(const RoadNetwork& network, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "# segment segment\n";
  std::set<SegmentId> linked;
  for (const auto& [a, b] : network.links()) {
    out << a << ' ' << b << '\n';
    linked.insert(a);
    linked.insert(b);
  }
  for (const auto& s : network.segments()) {
    if (!linked.count(s)) out << s << '\n';
  }
  write_all(path, out.str());
}

std::vector<SegmentId> read_sensors(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<SegmentId> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(strip_comment(line));
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 1) throw ParseError("expected one segment identifier per line", lineno);
    out.push_back(tokens[0]);
  }
  return out;
}

void write_sensors(const std::vector<SegmentId>& sensors, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& s : sensors) out << s << '\n';
  write_all(path, out.str());
}

std::string graph_to_json(const SpatioTemporalGraph& graph) {
  json doc;
  doc["nodes"] = graph.nodes();
  json spatial = json::array();
  for (const auto& [u, v] : graph.spatial_edge_names()) spatial.push_back({u, v});
  doc["spatial_edges"] = spatial;
  json temporal = json::array();
  for (const auto& v : graph.nodes()) temporal.push_back({v, v});
  doc["temporal_edges"] = temporal;
  return doc.dump(2) + "\n";
}

SpatioTemporalGraph graph_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("graph file is not valid JSON: ") + e.what());
  }
  try {
    auto nodes = doc.at("nodes").get<std::vector<SegmentId>>();
    std::vector<std::pair<SegmentId, SegmentId>> spatial;
    for (const auto& e : doc.at("spatial_edges")) {
      spatial.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    auto graph = SpatioTemporalGraph::from_edges(std::move(nodes), spatial);
    if (doc.contains("temporal_edges")) {
      const auto& temporal = doc.at("temporal_edges");
      if (temporal.size() != graph.num_nodes()) throw GraphError("temporal edge count differs from node count");
      for (const auto& e : temporal) {
        const auto a = e.at(0).get<std::string>();
        if (a != e.at(1).get<std::string>()) throw GraphError("temporal edge on '" + a + "' is not a self-edge");
        graph.index_of(a);
      }
    }
    return graph;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed graph file: ") + e.what());
  }
}

void write_graph(const SpatioTemporalGraph& graph, const std::filesystem::path& path) {
  write_all(path, graph_to_json(graph));
}

SpatioTemporalGraph read_graph(const std::filesystem::path& path) {
  return graph_from_json(read_all(path));
}

}  // namespace srnn::stgraph
