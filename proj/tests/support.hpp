// Shared fixtures and independent reference implementations for the tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "srnn/compute/array.hpp"
#include "srnn/compute/params.hpp"
#include "srnn/model.hpp"
#include "srnn/stgraph.hpp"

namespace srnn::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("srnn_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline compute::Array2 random_array(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  compute::Array2 a(rows, cols);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = u(rng);
  return a;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Replaces every parameter value with a fresh uniform draw.
inline void randomize(compute::ParamSet& params, std::mt19937_64& rng, double scale = 0.5) {
  for (auto& [path, p] : params) p.value = random_array(p.value.rows(), p.value.cols(), rng, -scale, scale);
}

// ---- scalar-loop reference SRNN -------------------------------------------
// Written element by element so it shares no code with the batched model.

namespace oracle {

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Cell {
  std::vector<double> h, c;
};

inline std::vector<double> dense(const compute::Array2& w, const compute::Array2& b, const std::vector<double>& x,
                                 bool relu) {
  std::vector<double> y(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = b(0, r);
    for (std::size_t k = 0; k < w.cols(); ++k) acc += w(r, k) * x[k];
    y[r] = relu && acc < 0.0 ? 0.0 : acc;
  }
  return y;
}

inline Cell lstm(const compute::Array2& w, const compute::Array2& b, const std::vector<double>& x,
                 const Cell& prev) {
  const std::size_t H = prev.h.size();
  const std::size_t in = x.size();
  auto gate = [&](std::size_t g, std::size_t j) {
    const std::size_t r = g * H + j;
    double acc = b(0, r);
    for (std::size_t k = 0; k < in; ++k) acc += w(r, k) * x[k];
    for (std::size_t k = 0; k < H; ++k) acc += w(r, in + k) * prev.h[k];
    return acc;
  };
  Cell next{std::vector<double>(H), std::vector<double>(H)};
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigm(gate(0, j));
    const double f = sigm(gate(1, j));
    const double g = std::tanh(gate(2, j));
    const double o = sigm(gate(3, j));
    next.c[j] = f * prev.c[j] + i * g;
    next.h[j] = o * std::tanh(next.c[j]);
  }
  return next;
}

struct States {
  std::vector<Cell> temporal, spatial, node;
};

inline States zero_states(const stgraph::SpatioTemporalGraph& g, const model::SrnnConfig& c) {
  auto z = [](std::size_t h) { return Cell{std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)}; };
  States s;
  s.temporal.assign(g.num_nodes(), z(c.edge_hidden));
  s.spatial.assign(g.num_spatial_edges(), z(c.edge_hidden));
  s.node.assign(g.num_nodes(), z(c.node_hidden));
  return s;
}

inline std::vector<double> step(const stgraph::SpatioTemporalGraph& g, const compute::ParamSet& p, States& s,
                                const std::vector<double>& x, const std::vector<double>& x_prev) {
  auto W = [&](const char* block) -> const compute::Array2& { return p.at(std::string(block) + ".weight").value; };
  auto B = [&](const char* block) -> const compute::Array2& { return p.at(std::string(block) + ".bias").value; };
  const std::size_t N = g.num_nodes();
  for (std::size_t v = 0; v < N; ++v) {
    const auto e = dense(W("temporal_edge_embed"), B("temporal_edge_embed"), {x_prev[v], x[v]}, true);
    s.temporal[v] = lstm(W("temporal_edge_lstm"), B("temporal_edge_lstm"), e, s.temporal[v]);
  }
  const auto& edges = g.spatial_edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto e =
        dense(W("spatial_edge_embed"), B("spatial_edge_embed"), {x[edges[k].src], x[edges[k].dst]}, true);
    s.spatial[k] = lstm(W("spatial_edge_lstm"), B("spatial_edge_lstm"), e, s.spatial[k]);
  }
  std::vector<double> y(N);
  for (std::size_t v = 0; v < N; ++v) {
    const std::size_t He = s.temporal[v].h.size();
    std::vector<double> agg(He, 0.0);
    std::size_t deg = 0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (edges[k].dst != v) continue;
      ++deg;
      for (std::size_t j = 0; j < He; ++j) agg[j] += s.spatial[k].h[j];
    }
    if (deg > 0) {
      for (auto& a : agg) a /= static_cast<double>(deg);
    }
    std::vector<double> in{x[v]};
    in.insert(in.end(), s.temporal[v].h.begin(), s.temporal[v].h.end());
    in.insert(in.end(), agg.begin(), agg.end());
    const auto e = dense(W("node_embed"), B("node_embed"), in, true);
    s.node[v] = lstm(W("node_lstm"), B("node_lstm"), e, s.node[v]);
    y[v] = dense(W("output_head"), B("output_head"), s.node[v].h, false)[0];
  }
  return y;
}

}  // namespace oracle

// Graph over sensors n0..n{k-1} with a random symmetric edge set; at most 3
// nodes keeps the oracle fast.
inline stgraph::SpatioTemporalGraph random_small_graph(std::size_t nodes, std::mt19937_64& rng) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < nodes; ++i) ids.push_back("n" + std::to_string(i));
  std::vector<std::pair<std::string, std::string>> edges;
  std::bernoulli_distribution coin(0.6);
  for (std::size_t a = 0; a < nodes; ++a) {
    for (std::size_t b = a + 1; b < nodes; ++b) {
      if (coin(rng)) {
        edges.emplace_back(ids[a], ids[b]);
        edges.emplace_back(ids[b], ids[a]);
      }
    }
  }
  return stgraph::SpatioTemporalGraph::from_edges(ids, edges);
}

}  // namespace srnn::testing
