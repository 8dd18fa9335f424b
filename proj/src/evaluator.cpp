#include "pairgraph/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "pairgraph/errors.hpp"
#include "pairgraph/market_data.hpp"

namespace pairgraph {

Split split_intervals(int K, const SplitSpec& spec) {
  if (!(spec.train_frac > 0.0 && spec.val_frac > 0.0 && spec.test_frac > 0.0) ||
      std::abs(spec.train_frac + spec.val_frac + spec.test_frac - 1.0) > 1e-9)
    throw ConfigError("split fractions must be positive and sum to 1");
  Split s;
  s.K = K;
  s.train_end = static_cast<int>(std::floor(spec.train_frac * K));
  s.val_end = s.train_end + static_cast<int>(std::floor(spec.val_frac * K));
  if (s.train_end < 1 || s.val_end <= s.train_end || s.K <= s.val_end)
    throw DataError("split leaves an empty range at K=" + std::to_string(K));
  return s;
}

double average_precision(const std::vector<std::pair<double, int>>& scored) {
  int n_pos = 0;
  for (const auto& [score, label] : scored) n_pos += label ? 1 : 0;
  if (n_pos == 0) throw DataError("average precision needs at least one positive label");

  std::vector<int> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scored[a].first > scored[b].first; });

  double ap = 0.0;
  int hits = 0;
  for (size_t r = 0; r < order.size(); ++r) {
    if (scored[order[r]].second) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return ap / n_pos;
}

double mape(const std::vector<double>& predicted, const std::vector<double>& actual) {
  if (predicted.size() != actual.size() || predicted.empty())
    throw DataError("mape needs equal nonempty prediction/actual lists");
  double acc = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    if (std::abs(actual[i]) < 1e-6)
      throw DataError("mape target too close to zero at index " + std::to_string(i));
    acc += std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
  }
  return 100.0 * acc / static_cast<double>(actual.size());
}

namespace {

// Shared prequential harness. The scorer receives the interval index, the
// candidate pairs (positives and sampled negatives in randomized order) and
// the query time, and returns one score per pair.
using Scorer = std::function<std::vector<double>(
    int interval, const std::vector<std::pair<int, int>>& pairs, double t_query)>;

MetricsReport run_prequential(const TemporalGraphSequence& graphs, int test_begin,
                              int test_end, std::mt19937_64& rng, bool all_pairs,
                              const Scorer& scorer,
                              const std::function<void(int interval)>& on_advance) {
  if (test_begin < 1 || test_end > graphs.partition.K || test_begin >= test_end)
    throw DataError("invalid test range");

  MetricsReport report;
  std::vector<std::pair<double, int>> pooled;
  std::vector<double> pooled_pred, pooled_actual;

  for (int k = test_begin; k < test_end; ++k) {
    const auto& pos = graphs.graphs[k];
    if (pos.empty()) {
      on_advance(k);
      continue;
    }

    std::vector<std::pair<int, int>> pairs;
    std::vector<int> labels;
    std::vector<double> actual;  // realized S per positive
    if (all_pairs) {
      std::map<std::pair<int, int>, double> realized;
      for (const Event& e : pos) realized[{e.src, e.dst}] = e.score;
      for (int i = 0; i < graphs.n_vertices; ++i)
        for (int j = i + 1; j < graphs.n_vertices; ++j) {
          auto it = realized.find({i, j});
          pairs.emplace_back(i, j);
          labels.push_back(it != realized.end() ? 1 : 0);
          if (it != realized.end()) actual.push_back(it->second);
        }
    } else {
      for (const Event& e : pos) {
        pairs.emplace_back(e.src, e.dst);
        labels.push_back(1);
        actual.push_back(e.score);
      }
      for (const Event& e : sample_negatives(pos, graphs.n_vertices, rng)) {
        pairs.emplace_back(std::min(e.src, e.dst), std::max(e.src, e.dst));
        labels.push_back(0);
      }
    }

    // Randomize candidate order so tied scores (stable-sorted later) carry no
    // information; a constant scorer then earns AP near the positive prevalence.
    {
      std::vector<int> perm(pairs.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<std::pair<int, int>> ppairs(pairs.size());
      std::vector<int> plabels(pairs.size());
      std::vector<double> pactual;
      pactual.reserve(actual.size());
      std::vector<size_t> pos_offset(pairs.size(), 0);  // positive index per slot
      size_t seen = 0;
      for (size_t p = 0; p < pairs.size(); ++p)
        if (labels[p]) pos_offset[p] = seen++;
      for (size_t p = 0; p < perm.size(); ++p) {
        ppairs[p] = pairs[perm[p]];
        plabels[p] = labels[perm[p]];
        if (plabels[p]) pactual.push_back(actual[pos_offset[perm[p]]]);
      }
      pairs = std::move(ppairs);
      labels = std::move(plabels);
      actual = std::move(pactual);
    }

    const std::vector<double> scores = scorer(k, pairs, graphs.partition.midpoint(k));

    std::vector<std::pair<double, int>> interval_scored;
    std::vector<double> interval_pred;
    int n_pos_k = 0, n_neg_k = 0;
    size_t pos_seen = 0;
    for (size_t p = 0; p < pairs.size(); ++p) {
      interval_scored.emplace_back(scores[p], labels[p]);
      pooled.emplace_back(scores[p], labels[p]);
      if (labels[p]) {
        ++n_pos_k;
        interval_pred.push_back(scores[p]);
        pooled_pred.push_back(scores[p]);
        pooled_actual.push_back(actual[pos_seen++]);
      } else {
        ++n_neg_k;
      }
    }

    IntervalMetrics im;
    im.interval = k;
    im.ap = average_precision(interval_scored);
    im.mape = mape(interval_pred, std::vector<double>(actual.begin(), actual.end()));
    im.n_pos = n_pos_k;
    im.n_neg = n_neg_k;
    report.per_interval.push_back(im);
    report.n_pos += n_pos_k;
    report.n_neg += n_neg_k;

    on_advance(k);
  }

  if (report.n_pos == 0) throw DataError("no positive events in the test range");
  report.ap = average_precision(pooled);
  report.mape = mape(pooled_pred, pooled_actual);
  return report;
}

}  // namespace

MetricsReport evaluate(const Model& model, MemoryState mem, NeighborStore nbrs,
                       const TemporalGraphSequence& graphs, int test_begin, int test_end,
                       const Eigen::MatrixXd& feats, std::mt19937_64& rng,
                       bool all_pairs) {
  Scorer scorer = [&](int, const std::vector<std::pair<int, int>>& pairs, double t_query) {
    return model.score_pairs(mem, nbrs, pairs, feats, t_query);
  };
  auto on_advance = [&](int k) { model.advance(mem, nbrs, graphs.graphs[k]); };
  return run_prequential(graphs, test_begin, test_end, rng, all_pairs, scorer, on_advance);
}

MetricsReport persistence_baseline(const TemporalGraphSequence& graphs, int test_begin,
                                   int test_end, std::mt19937_64& rng, bool all_pairs) {
  Scorer scorer = [&](int k, const std::vector<std::pair<int, int>>& pairs, double) {
    std::map<std::pair<int, int>, double> prev;
    for (const Event& e : graphs.graphs[k - 1]) prev[{e.src, e.dst}] = e.score;
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const auto& pr : pairs) {
      auto it = prev.find(pr);
      scores.push_back(it != prev.end() ? it->second : 0.0);
    }
    return scores;
  };
  return run_prequential(graphs, test_begin, test_end, rng, all_pairs, scorer,
                         [](int) {});
}

MetricsReport ablation_run(Variant variant, const TemporalGraphSequence& graphs,
                           const EntityFeatures& feats, const TrainConfig& cfg,
                           const Split& split, bool all_pairs) {
  const int n = graphs.n_vertices;
  const Eigen::MatrixXd used_feats = variant == Variant::one_hot
                                         ? Eigen::MatrixXd::Identity(n, n)
                                         : feats.vectors;
  Model model(cfg.model, static_cast<int>(used_feats.cols()), variant, cfg.seed);
  train(model, graphs, used_feats, split.train_end, cfg,
        cfg.early_stop ? split.val_end : -1);

  MemoryState mem;
  NeighborStore nbrs;
  stream_memory(model, graphs, split.val_end, mem, nbrs);
  std::mt19937_64 rng(rng::mix(cfg.seed ^ 0x6576616c75617465ULL));
  return evaluate(model, std::move(mem), std::move(nbrs), graphs, split.val_end, split.K,
                  used_feats, rng, all_pairs);
}

}  // namespace pairgraph
