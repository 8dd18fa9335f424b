#pragma once

#include <random>
#include <utility>
#include <vector>

#include "pairgraph/market_data.hpp"
#include "pairgraph/model.hpp"
#include "pairgraph/relation_graph.hpp"
#include "pairgraph/trainer.hpp"

namespace pairgraph {

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
};

// Contiguous chronological interval ranges: train [0, train_end),
// val [train_end, val_end), test [val_end, K).
struct Split {
  int train_end = 0;
  int val_end = 0;
  int K = 0;
};

Split split_intervals(int K, const SplitSpec& spec = {});

// Area under the precision-recall curve of the descending-score ranking;
// ties keep stable input order. Throws DataError without any positive label.
double average_precision(const std::vector<std::pair<double, int>>& scored);

// 100 * mean(|pred - actual| / |actual|); every |actual| must be >= 1e-6.
double mape(const std::vector<double>& predicted, const std::vector<double>& actual);

struct IntervalMetrics {
  int interval;
  double ap;
  double mape;
  int n_pos;
  int n_neg;
};

struct MetricsReport {
  double ap = 0.0;
  double mape = 0.0;
  int n_pos = 0;
  int n_neg = 0;
  std::vector<IntervalMetrics> per_interval;
};

// Prequential evaluation over test intervals [test_begin, test_end): score
// each interval's positives plus equal sampled negatives with the lag-one
// state, then advance memory with the realized events. MAPE compares the
// decoder output against the realized correlation score of positive pairs.
// `mem`/`nbrs` must be streamed through intervals [0, test_begin).
MetricsReport evaluate(const Model& model, MemoryState mem, NeighborStore nbrs,
                       const TemporalGraphSequence& graphs, int test_begin, int test_end,
                       const Eigen::MatrixXd& feats, std::mt19937_64& rng,
                       bool all_pairs = false);

// Scores a pair at interval k by its realized correlation at interval k-1
// (0 when no edge existed); same candidate-set protocol as `evaluate`.
MetricsReport persistence_baseline(const TemporalGraphSequence& graphs, int test_begin,
                                   int test_end, std::mt19937_64& rng,
                                   bool all_pairs = false);

// Trains the requested variant on the train range, streams through train+val
// and evaluates the test range. `one_hot` swaps features for the identity;
// `edgeless` bypasses the attention path.
MetricsReport ablation_run(Variant variant, const TemporalGraphSequence& graphs,
                           const EntityFeatures& feats, const TrainConfig& cfg,
                           const Split& split, bool all_pairs = false);

}  // namespace pairgraph
