// Acceptance suite: one PASS/FAIL line per criterion, with the measured value,
// its threshold and the runtime against its budget. Exit status is the number
// of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "srnn/checkpoint.hpp"
#include "srnn/data.hpp"
#include "srnn/error.hpp"
#include "srnn/eval.hpp"
#include "srnn/model.hpp"
#include "srnn/train.hpp"
#include "support.hpp"

using namespace srnn;

namespace {

// Thresholds.
constexpr std::size_t kFullParamCount = 986753;
constexpr double kReportedParamCount = 1.1e6;
constexpr double kReportedCountTolerance = 0.12;
constexpr double kGradEpsilon = 1e-5;
constexpr double kGradTolerance = 1e-4;
constexpr double kOracleTolerance = 1e-12;
constexpr double kOverfitMse = 1e-3;
constexpr double kMetricTolerance = 1e-12;
constexpr double kScaleRoundTrip = 1e-9;

// Runtime budgets in seconds.
constexpr double kBudget1 = 1, kBudget2 = 10, kBudget3 = 10, kBudget4 = 120, kBudget5 = 900, kBudget6 = 1,
                 kBudget7 = 300, kBudget8 = 1;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget;
  const bool ok = o.pass && in_time;
  failures += ok ? 0 : 1;
  std::printf("%s  %d. %-24s %s [%.2f s, budget %.0f s%s]\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs,
              budget, in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

model::SrnnConfig dims(std::size_t node, std::size_t edge, std::size_t embed, std::uint64_t seed = 0) {
  model::SrnnConfig c;
  c.node_hidden = node;
  c.edge_hidden = edge;
  c.embed_dim = embed;
  c.seed = seed;
  return c;
}

stgraph::SpatioTemporalGraph grid_graph(std::size_t rows, std::size_t cols) {
  const auto net = stgraph::grid_network(rows, cols);
  return stgraph::build_spatial_graph(net, std::vector<std::string>(net.segments().begin(), net.segments().end()));
}

Outcome parameter_count() {
  const model::SrnnConfig full;
  const auto params = model::init_params(full);
  const std::size_t n = model::count_params(params);
  bool invariant = n == model::expected_param_count(full);
  // The same parameter set drives any graph size and window length.
  for (std::size_t nodes : {10u, 50u}) {
    const auto g = model::chain_graph(nodes);
    for (std::size_t l : {10u, 15u}) {
      const compute::Array2 window(l + 1, nodes, 0.5);
      invariant = invariant && model::forward_window(g, params, window).rows() == l &&
                  model::count_params(params) == n;
    }
  }
  const double rel = std::abs(static_cast<double>(n) - kReportedParamCount) / kReportedParamCount;
  return {n == kFullParamCount && rel < kReportedCountTolerance && invariant,
          fmt("count %.0f (expected 986753), %.1f%% from 1.1e6 (limit 12%%)", static_cast<double>(n), 100 * rel) +
              (invariant ? ", equal for l in {10,15}, N in {10,50}" : ", NOT invariant")};
}

Outcome gradient_check() {
  compute::GradCheckOptions opt;
  opt.epsilon = kGradEpsilon;
  opt.tolerance = kGradTolerance;
  const auto r = model::check_gradients(2, dims(4, 4, 4), 3, opt);
  return {r.pass && r.max_rel_error < kGradTolerance,
          fmt("max relative error %.2e (limit 1e-4), worst ", r.max_rel_error) + r.worst_path};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 2;
    const auto g = testing::random_small_graph(n, rng);
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    auto p = model::init_params(dims(dim(rng), dim(rng), dim(rng), trial));
    testing::randomize(p, rng, 1.0);
    auto states = model::init_states(g, p);
    auto ref = testing::oracle::zero_states(g, model::dims_from_params(p));
    auto prev = testing::random_vector(n, rng, 0, 1);
    for (int t = 0; t < 5; ++t) {
      const auto x = testing::random_vector(n, rng, 0, 1);
      const auto got = model::forward_step(g, p, states, x, prev);
      const auto want = testing::oracle::step(g, p, ref, x, prev);
      for (std::size_t v = 0; v < n; ++v) worst = std::max(worst, std::abs(got[v] - want[v]));
      prev = x;
    }
  }
  return {worst <= kOracleTolerance, fmt("100 configurations x 5 steps, max |diff| %.2e (limit 1e-12)", worst)};
}

Outcome overfit() {
  // Default model and optimizer settings; the batch is a single fixed window.
  const auto g = model::chain_graph(2);
  const auto speeds = data::synth_traffic(2, 200, g, 0);
  train::TrainConfig c;
  c.l = 10;
  c.epochs = 200;
  data::set_warning_handler([](const std::string&) {});
  auto d = train::prepare_data(g, speeds, c);
  data::set_warning_handler(nullptr);
  d.train_windows.resize(1);
  const auto r = train::train(g, d, c, model::SrnnConfig{});
  const double mse = r.report.epochs.back().train_mse;
  return {mse < kOverfitMse, fmt("training MSE after 200 epochs %.2e (limit 1e-3), start %.2e", mse,
                                 r.report.epochs.front().train_mse)};
}

Outcome structural_advantage() {
  // Hidden sizes are reduced to fit the runtime budget on one core; training
  // settings (batch 8, lr 0.001, decay 0.99, 20 epochs) are the defaults.
  const auto g = grid_graph(2, 5);
  double full = 0, ablated = 0, persistence = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    data::SynthOptions opt;
    opt.coupling = 0.3;
    const auto speeds = data::synth_traffic(10, 3000, g, seed, opt);
    train::TrainConfig c;
    c.l = 10;
    c.seed = seed;
    const auto m = dims(16, 16, 16, seed);
    data::set_warning_handler([](const std::string&) {});
    const auto d = train::prepare_data(g, speeds, c);
    data::set_warning_handler(nullptr);
    const auto a = train::train(g, d, c, m);
    const auto ablated_graph = eval::ablate_spatial(g);
    const auto b = train::train(ablated_graph, d, c, m);
    const double f = a.report.epochs[a.report.best_epoch].eval_rmse;
    const double s = b.report.epochs[b.report.best_epoch].eval_rmse;
    const double p = eval::metric_report("p", eval::persistence_baseline(d.eval_raw, c.l), g.nodes()).rmse;
    full += f / 3;
    ablated += s / 3;
    persistence += p / 3;
    per_seed += fmt(" | seed %.0f: %.3f/%.3f", static_cast<double>(seed), f, s) + fmt("/%.3f", p);
  }
  return {full < ablated && full < persistence,
          fmt("mean eval RMSE full %.4f < ablated %.4f, persistence %.4f km/h", full, ablated, persistence) +
              per_seed};
}

Outcome metric_correctness() {
  const std::vector<double> truth{10, 20}, pred{12, 17};
  const double e1 = std::abs(eval::mae(pred, truth) - 2.5);
  const double e2 = std::abs(eval::rmse(pred, truth) - std::sqrt(6.5));
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> len(1, 100);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = len(rng);
    const auto a = testing::random_vector(n, rng, 0, 120);
    const auto b = testing::random_vector(n, rng, 0, 120);
    violations += eval::rmse(a, b) >= eval::mae(a, b) ? 0 : 1;
  }
  return {e1 <= kMetricTolerance && e2 <= kMetricTolerance && violations == 0,
          fmt("hand example errors %.1e / %.1e (limit 1e-12), rmse<mae in %.0f of 1000 random reports", e1, e2,
              violations)};
}

Outcome determinism_and_persistence() {
  testing::TempDir dir("acceptance");
  const auto g = grid_graph(1, 3);
  const auto speeds = data::synth_traffic(3, 400, g, 11);
  train::TrainConfig c;
  c.l = 10;
  c.epochs = 4;
  c.seed = 5;
  const auto m = dims(8, 8, 8, 5);
  const auto d = train::prepare_data(g, speeds, c);

  const auto a = train::train(g, d, c, m);
  const auto b = train::train(g, d, c, m);
  const bool same_report = a.report.same_trajectory(b.report) && a.best_params.same_values(b.best_params);

  checkpoint::Checkpoint ck{m, c, d.scaling, a.best_params, std::nullopt, std::nullopt};
  checkpoint::save_checkpoint(ck, dir / "rt.ckpt");
  const auto back = checkpoint::load_checkpoint(dir / "rt.ckpt");
  const bool round_trip = back.params.same_values(ck.params) && checkpoint::to_json(back) == checkpoint::to_json(ck);

  auto part = c;
  part.epochs = 2;
  part.checkpoint_dir = dir.path().string();
  train::train(g, d, part, m);
  part.epochs = 4;
  const auto resumed = train::resume(g, d, part, dir / "last.ckpt");
  const bool resume_ok = resumed.report.same_trajectory(a.report) && resumed.best_params.same_values(a.best_params);

  return {same_report && round_trip && resume_ok,
          std::string("identical reports: ") + (same_report ? "yes" : "NO") +
              ", bit-exact checkpoint: " + (round_trip ? "yes" : "NO") +
              ", resume(2->4) equals uninterrupted: " + (resume_ok ? "yes" : "NO")};
}

data::SpeedMatrix ramp(std::size_t steps) {
  data::SpeedMatrix m;
  m.segment_ids = {"s"};
  for (std::size_t t = 0; t < steps; ++t) m.timestamps.push_back(1451606400 + static_cast<std::int64_t>(t) * 900);
  m.values = compute::Array2(1, steps);
  for (std::size_t t = 0; t < steps; ++t) m.values(0, t) = 20.0 + static_cast<double>(t);
  m.missing.assign(steps, 0);
  return m;
}

Outcome data_pipeline() {
  // Imputation: 08:00 readings over four days are 50, 60, missing, 70.
  data::SpeedMatrix days;
  days.segment_ids = {"v"};
  const std::int64_t t0 = data::parse_timestamp("2016-03-01T08:00:00");
  const std::size_t steps = 3 * data::kSlotsPerDay + 1;
  for (std::size_t t = 0; t < steps; ++t) days.timestamps.push_back(t0 + static_cast<std::int64_t>(t) * 900);
  days.values = compute::Array2(1, steps, 45.0);
  days.missing.assign(steps, 0);
  const double readings[] = {50, 60, 0, 70};
  for (std::size_t d = 0; d < 4; ++d) days.values(0, d * data::kSlotsPerDay) = readings[d];
  days.missing[2 * data::kSlotsPerDay] = 1;
  const bool imputed = data::impute_missing(days).values(0, 2 * data::kSlotsPerDay) == 60.0;

  const data::ScalingStats s{0.0, 90.0};
  bool scaling = s.scale(45.0) == 0.5 && s.scale(0.0) == 0.0 && s.scale(90.0) == 1.0;
  for (double x = 0.0; x <= 90.0; x += 0.37) scaling = scaling && std::abs(s.unscale(s.scale(x)) - x) < kScaleRoundTrip;

  const auto [tr12, ev12] = data::split_train_eval(ramp(12), 0.75);
  const auto [tr100, ev100] = data::split_train_eval(ramp(100), 0.75);
  const bool split = tr12.num_steps() == 9 && ev12.num_steps() == 3 && tr100.num_steps() == 75 &&
                     tr12.timestamps.back() < ev12.timestamps.front();

  const std::size_t w12 = data::make_windows(ramp(12), 10).size();
  const std::size_t w13 = data::make_windows(ramp(13), 10).size();
  const bool windows = w12 == 1 && w13 == 2;

  return {imputed && scaling && split && windows,
          std::string("imputation ") + (imputed ? "ok" : "WRONG") + ", scaling " + (scaling ? "ok" : "WRONG") +
              ", split 12->9/3 and 100->75 " + (split ? "ok" : "WRONG") +
              fmt(", windows 12->%.0f 13->%.0f", static_cast<double>(w12), static_cast<double>(w13))};
}

}  // namespace

int main() {
  criterion(1, "parameter count", kBudget1, parameter_count);
  criterion(2, "gradient correctness", kBudget2, gradient_check);
  criterion(3, "oracle equivalence", kBudget3, oracle_equivalence);
  criterion(4, "overfit", kBudget4, overfit);
  criterion(5, "structural advantage", kBudget5, structural_advantage);
  criterion(6, "metric correctness", kBudget6, metric_correctness);
  criterion(7, "determinism/persistence", kBudget7, determinism_and_persistence);
  criterion(8, "data pipeline", kBudget8, data_pipeline);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
