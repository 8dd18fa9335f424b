#include <doctest.h>

#include <cmath>
#include <random>

#include "pairgraph/errors.hpp"
#include "pairgraph/evaluator.hpp"

using namespace pairgraph;

namespace {

// Exhaustive reference: repeatedly select the highest remaining score (lowest
// input index on ties) and accumulate precision at each positive's rank.
double reference_ap(std::vector<std::pair<double, int>> scored) {
  const size_t n = scored.size();
  std::vector<bool> used(n, false);
  double ap = 0.0;
  int hits = 0, n_pos = 0;
  for (const auto& [s, l] : scored) n_pos += l ? 1 : 0;
  for (size_t rank = 1; rank <= n; ++rank) {
    size_t best = n;
    for (size_t i = 0; i < n; ++i)
      if (!used[i] && (best == n || scored[i].first > scored[best].first)) best = i;
    used[best] = true;
    if (scored[best].second) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return ap / n_pos;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d = 4;
  cfg.L = 1;
  cfg.n_heads = 2;
  cfg.N = 5;
  cfg.d_time = 3;
  cfg.decoder_hidden = 4;
  return cfg;
}

// Clique among vertices 0..4 (n=10) repeated every interval.
TemporalGraphSequence clique_sequence(int n, int K, double score) {
  TemporalGraphSequence seq;
  seq.partition = partition_horizon(2 * K, K);
  seq.n_vertices = n;
  seq.graphs.resize(K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j)
        seq.graphs[k].push_back(Event{i, j, seq.partition.midpoint(k), score});
  return seq;
}

}  // namespace

TEST_CASE("split_intervals: floor/floor/remainder") {
  const Split s10 = split_intervals(10);
  CHECK(s10.train_end == 6);
  CHECK(s10.val_end == 8);
  CHECK(s10.K == 10);

  const Split s5 = split_intervals(5);
  CHECK(s5.train_end == 3);
  CHECK(s5.val_end == 4);
  CHECK(s5.K == 5);

  CHECK_THROWS_AS(split_intervals(4), DataError);
  CHECK_THROWS_AS(split_intervals(2), DataError);
  CHECK_THROWS_AS(split_intervals(10, SplitSpec{0.5, 0.2, 0.2}), ConfigError);
}

TEST_CASE("average_precision: hand values") {
  CHECK(average_precision({{0.9, 1}, {0.8, 1}, {0.3, 0}, {0.2, 0}}) == 1.0);
  // single positive ranked last among 4: precision at rank 4 is 1/4
  CHECK(average_precision({{0.9, 0}, {0.8, 0}, {0.7, 0}, {0.1, 1}}) == 0.25);
  CHECK(average_precision({{0.5, 1}}) == 1.0);
  CHECK_THROWS_AS(average_precision({{0.9, 0}, {0.1, 0}}), DataError);
}

TEST_CASE("average_precision: ties keep stable input order") {
  CHECK(average_precision({{0.5, 1}, {0.5, 0}}) == 1.0);
  CHECK(average_precision({{0.5, 0}, {0.5, 1}}) == 0.5);
}

TEST_CASE("average_precision: random scores on balanced labels hover near 0.5") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double acc = 0.0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < 2000; ++i) scored.emplace_back(u(rng), i % 2);
    acc += average_precision(scored);
  }
  CHECK(std::abs(acc / seeds - 0.5) < 0.05);
}

TEST_CASE("average_precision matches the exhaustive reference on random instances") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 30);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<double, int>> scored;
    const int n = len(rng);
    bool any_pos = false;
    for (int i = 0; i < n; ++i) {
      // coarse scores force plenty of ties
      const int label = u(rng) < 0.4 ? 1 : 0;
      any_pos |= label == 1;
      scored.emplace_back(std::round(u(rng) * 4) / 4.0, label);
    }
    if (!any_pos) scored.emplace_back(u(rng), 1);
    CHECK(average_precision(scored) == doctest::Approx(reference_ap(scored)).epsilon(1e-12));
  }
}

TEST_CASE("mape: hand values and errors") {
  CHECK(mape({0.3, 0.7}, {0.3, 0.7}) == 0.0);
  CHECK(mape({0.5}, {1.0}) == 50.0);
  CHECK(mape({0.9, 0.8}, {1.0, 1.0}) == doctest::Approx(15.0).epsilon(1e-12));
  CHECK_THROWS_AS(mape({0.5}, {0.0}), DataError);
  CHECK_THROWS_AS(mape({0.5, 0.5}, {1.0}), DataError);
  CHECK_THROWS_AS(mape({}, {}), DataError);
}

TEST_CASE("persistence_baseline: static sequence is predicted perfectly") {
  const auto seq = clique_sequence(10, 8, 0.95);
  std::mt19937_64 rng(11);
  const auto report = persistence_baseline(seq, 5, 8, rng, /*all_pairs=*/true);
  CHECK(report.ap == 1.0);
  CHECK(report.mape == 0.0);
  CHECK(report.n_pos == 3 * 10);
  REQUIRE(report.per_interval.size() == 3u);
  for (const auto& im : report.per_interval) CHECK(im.ap == 1.0);
}

TEST_CASE("persistence_baseline: non-recurring edges score zero, MAPE is 100%") {
  TemporalGraphSequence seq;
  seq.partition = partition_horizon(12, 6);
  seq.n_vertices = 6;
  seq.graphs.resize(6);
  for (int k = 0; k < 6; ++k) {
    // even intervals connect (0,1); odd connect (2,3): no edge ever recurs
    if (k % 2 == 0)
      seq.graphs[k].push_back(Event{0, 1, seq.partition.midpoint(k), 0.95});
    else
      seq.graphs[k].push_back(Event{2, 3, seq.partition.midpoint(k), 0.93});
  }
  std::mt19937_64 rng(13);
  const auto report = persistence_baseline(seq, 3, 6, rng);
  CHECK(report.mape == 100.0);  // every positive predicted as 0
}

TEST_CASE("evaluate: zeroed decoder head is uninformative, AP near prevalence") {
  const auto cfg = tiny_config();
  const auto seq = clique_sequence(10, 20, 0.95);
  const Eigen::MatrixXd feats = Eigen::MatrixXd::Identity(10, 10);
  double acc = 0.0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    Model model(cfg, 10, Variant::full, 100 + s);
    model.params().at("dec.W2").value.setZero();
    model.params().at("dec.b2").value.setZero();
    MemoryState mem;
    NeighborStore nbrs;
    stream_memory(model, seq, 12, mem, nbrs);
    std::mt19937_64 rng(200 + s);
    const auto report = evaluate(model, std::move(mem), std::move(nbrs), seq, 12, 20,
                                 feats, rng);
    CHECK(report.n_pos == report.n_neg);
    acc += report.ap;
  }
  CHECK(std::abs(acc / seeds - 0.5) < 0.05);
}

TEST_CASE("evaluate: report shape, balanced candidates, deterministic given rng") {
  const auto cfg = tiny_config();
  const auto seq = clique_sequence(10, 10, 0.95);
  const Eigen::MatrixXd feats = Eigen::MatrixXd::Identity(10, 10);
  Model model(cfg, 10, Variant::full, 55);

  auto run = [&] {
    MemoryState mem;
    NeighborStore nbrs;
    stream_memory(model, seq, 8, mem, nbrs);
    std::mt19937_64 rng(77);
    return evaluate(model, std::move(mem), std::move(nbrs), seq, 8, 10, feats, rng);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.ap == b.ap);
  CHECK(a.mape == b.mape);
  CHECK(a.ap >= 0.0);
  CHECK(a.ap <= 1.0);
  CHECK(a.mape >= 0.0);
  REQUIRE(a.per_interval.size() == 2u);
  for (const auto& im : a.per_interval) {
    CHECK(im.n_pos == 10);
    CHECK(im.n_neg == 10);
  }

  MemoryState mem;
  NeighborStore nbrs;
  stream_memory(model, seq, 8, mem, nbrs);
  std::mt19937_64 rng(77);
  CHECK_THROWS_AS(
      evaluate(model, std::move(mem), std::move(nbrs), seq, 8, 8, feats, rng), DataError);
}

TEST_CASE("ablation_run: every variant produces a sane report") {
  const auto seq = clique_sequence(10, 10, 0.95);
  EntityFeatures feats;
  for (int i = 0; i < 10; ++i) feats.entities.push_back("E" + std::to_string(i));
  feats.vectors = Eigen::MatrixXd::Identity(10, 10).leftCols(3);
  TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 5;
  tc.model = tiny_config();
  const Split split = split_intervals(10);
  for (Variant v : {Variant::full, Variant::one_hot, Variant::edgeless}) {
    const auto report = ablation_run(v, seq, feats, tc, split);
    CHECK(report.ap >= 0.0);
    CHECK(report.ap <= 1.0);
    CHECK(report.n_pos > 0);
    CHECK(report.per_interval.size() == 2u);
  }
}
