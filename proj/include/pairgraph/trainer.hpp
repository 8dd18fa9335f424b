#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pairgraph/model.hpp"
#include "pairgraph/relation_graph.hpp"

namespace pairgraph {

struct TrainConfig {
  int epochs = 50;
  double lr = 0.01;
  double weight_decay = 0.0001;
  std::uint64_t seed = 0;
  double gamma = 0.9;
  int K = 0;  // informational; the graph sequence carries the partition
  ModelConfig model;
  bool early_stop = false;
  int patience = 10;
  // Initialize the decoder output bias to the log-odds of the mean observed
  // event score over the training intervals. The decoder output doubles as
  // the relation-score estimate, so this anchors the untrained scorer at the
  // typical observed score instead of the constant-predictor floor.
  bool prior_score_bias = false;
  // Linear learning-rate ramp from 0 to lr over the first warmup_epochs
  // epochs (counted in batches); 0 disables.
  int warmup_epochs = 0;
  // Global gradient-norm cap applied before each optimizer step; 0 disables.
  // Single loss spikes otherwise blow the ReLU embedding path into a dead
  // region from which the constant predictor is the only attractor.
  double clip_norm = 5.0;
  // Memory and neighbor store reset at every epoch start when true.
  bool memory_reset_per_epoch = true;
};

struct LossEntry {
  int epoch;  // 1-based
  int batch;  // interval index (0-based) being predicted
  double loss;
};

struct TrainResult {
  std::vector<LossEntry> trace;
  MemoryState mem;      // streamed with final parameters over the trained range
  NeighborStore nbrs;
  int epochs_run = 0;
};

// For each positive (i, j, t) emits (i, k, t) with k uniform over
// vertices \ {i}; deterministic given the rng state.
std::vector<Event> sample_negatives(std::span<const Event> positives, int n_vertices,
                                    std::mt19937_64& rng);

// Replays memory updates and neighbor ingestion over intervals [0, k_end)
// without touching parameters.
void stream_memory(const Model& model, const TemporalGraphSequence& graphs, int k_end,
                   MemoryState& mem, NeighborStore& nbrs);

// Lag-one training over intervals [0, k_train_end): batch k-1 refreshes the
// memory and neighbor store used to predict batch k. When early stopping is
// enabled, validation AP over [k_train_end, k_val_end) gates the epochs.
TrainResult train(Model& model, const TemporalGraphSequence& graphs,
                  const Eigen::MatrixXd& feats, int k_train_end, const TrainConfig& cfg,
                  int k_val_end = -1);

}  // namespace pairgraph
