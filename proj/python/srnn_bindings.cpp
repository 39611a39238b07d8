#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "srnn/cli.hpp"
#include "srnn/data.hpp"
#include "srnn/error.hpp"
#include "srnn/eval.hpp"
#include "srnn/model.hpp"
#include "srnn/stgraph.hpp"

namespace py = pybind11;

namespace {

srnn::stgraph::RoadNetwork make_network(const std::vector<std::pair<std::string, std::string>>& links) {
  srnn::stgraph::RoadNetwork net;
  for (const auto& [a, b] : links) net.add_link(a, b);
  return net;
}

py::array_t<double> to_numpy(const srnn::compute::Array2& a) {
  py::array_t<double> out({a.rows(), a.cols()});
  std::copy(a.data(), a.data() + a.size(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_srnn, m) {
  m.doc() = "Structural RNN traffic speed forecasting";

  py::register_exception<srnn::Error>(m, "SrnnError", PyExc_ValueError);

  py::class_<srnn::model::SrnnConfig>(m, "SrnnConfig")
      .def(py::init([](std::size_t node_hidden, std::size_t edge_hidden, std::size_t embed_dim,
                       std::uint64_t seed) {
             srnn::model::SrnnConfig c;
             c.node_hidden = node_hidden;
             c.edge_hidden = edge_hidden;
             c.embed_dim = embed_dim;
             c.seed = seed;
             c.validate();
             return c;
           }),
           py::arg("node_hidden") = 128, py::arg("edge_hidden") = 256, py::arg("embed_dim") = 128,
           py::arg("seed") = 0)
      .def_readwrite("node_hidden", &srnn::model::SrnnConfig::node_hidden)
      .def_readwrite("edge_hidden", &srnn::model::SrnnConfig::edge_hidden)
      .def_readwrite("embed_dim", &srnn::model::SrnnConfig::embed_dim)
      .def_readwrite("seed", &srnn::model::SrnnConfig::seed);

  m.def("count_params", [](const srnn::model::SrnnConfig& c) {
    return srnn::model::count_params(srnn::model::zero_params(c));
  });
  m.def("expected_param_count", &srnn::model::expected_param_count);

  m.def(
      "gradcheck",
      [](std::size_t nodes, const srnn::model::SrnnConfig& c, std::size_t l, double eps, double tol) {
        srnn::compute::GradCheckOptions opt;
        opt.epsilon = eps;
        opt.tolerance = tol;
        const auto r = srnn::model::check_gradients(nodes, c, l, opt);
        return py::make_tuple(r.max_rel_error, r.pass);
      },
      py::arg("nodes"), py::arg("config"), py::arg("l"), py::arg("eps") = 1e-5, py::arg("tol") = 1e-4,
      "Returns (max_rel_error, passed).");

  m.def("mae", [](const std::vector<double>& pred, const std::vector<double>& truth) {
    return srnn::eval::mae(pred, truth);
  });
  m.def("rmse", [](const std::vector<double>& pred, const std::vector<double>& truth) {
    return srnn::eval::rmse(pred, truth);
  });

  m.def(
      "hop_distance",
      [](const std::vector<std::pair<std::string, std::string>>& links, const std::string& a,
         const std::string& b) { return srnn::stgraph::hop_distance(make_network(links), a, b); },
      "Shortest-path link count between two segments, or None if disconnected.");

  m.def(
      "build_graph",
      [](const std::vector<std::pair<std::string, std::string>>& links, const std::vector<std::string>& sensors) {
        const auto g = srnn::stgraph::build_spatial_graph(make_network(links), sensors);
        return py::make_tuple(g.nodes(), g.spatial_edge_names());
      },
      "Returns (nodes, spatial_edges) with edges as (source, destination) names.");

  m.def(
      "synth_grid",
      [](std::size_t rows, std::size_t cols, std::size_t steps, std::uint64_t seed, double coupling) {
        const auto net = srnn::stgraph::grid_network(rows, cols);
        const std::vector<std::string> sensors(net.segments().begin(), net.segments().end());
        const auto g = srnn::stgraph::build_spatial_graph(net, sensors);
        srnn::data::SynthOptions opt;
        opt.coupling = coupling;
        const auto speeds = srnn::data::synth_traffic(g.num_nodes(), steps, g, seed, opt);
        return py::make_tuple(speeds.segment_ids, to_numpy(speeds.values));
      },
      py::arg("rows"), py::arg("cols"), py::arg("steps"), py::arg("seed") = 0, py::arg("coupling") = 0.3,
      "Synthetic speeds on a grid network: (segment_ids, N x T array in km/h).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = srnn::cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs the srnn command line and returns (exit_code, stdout, stderr).");
}
