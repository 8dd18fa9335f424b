#include "pairgraph/trainer.hpp"

#include <algorithm>

#include "pairgraph/errors.hpp"
#include "pairgraph/evaluator.hpp"
#include "pairgraph/market_data.hpp"

namespace pairgraph {

namespace {

// Uniform integer in [0, n); modulo bias is negligible at desk scale.
int uniform_index(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

std::vector<std::pair<int, int>> to_pairs(std::span<const Event> events) {
  std::vector<std::pair<int, int>> out;
  out.reserve(events.size());
  for (const Event& e : events) out.emplace_back(e.src, e.dst);
  return out;
}

}  // namespace

std::vector<Event> sample_negatives(std::span<const Event> positives, int n_vertices,
                                    std::mt19937_64& rng) {
  if (n_vertices < 2) throw DataError("negative sampling needs at least 2 vertices");
  std::vector<Event> out;
  out.reserve(positives.size());
  for (const Event& e : positives) {
    int k = uniform_index(rng, n_vertices - 1);
    if (k >= e.src) ++k;  // uniform over vertices \ {src}
    out.push_back(Event{e.src, k, e.t, 0.0});
  }
  return out;
}

void stream_memory(const Model& model, const TemporalGraphSequence& graphs, int k_end,
                   MemoryState& mem, NeighborStore& nbrs) {
  mem = MemoryState::zero(graphs.n_vertices, model.config().d);
  nbrs = NeighborStore::empty(graphs.n_vertices, model.config().N);
  for (int k = 0; k < k_end; ++k) model.advance(mem, nbrs, graphs.graphs[k]);
}

namespace {

double validation_ap(const Model& model, const TemporalGraphSequence& graphs,
                     const Eigen::MatrixXd& feats, int val_begin, int val_end,
                     std::mt19937_64& rng) {
  MemoryState mem;
  NeighborStore nbrs;
  stream_memory(model, graphs, val_begin, mem, nbrs);
  auto report = evaluate(model, std::move(mem), std::move(nbrs), graphs, val_begin,
                         val_end, feats, rng);
  return report.ap;
}

}  // namespace

TrainResult train(Model& model, const TemporalGraphSequence& graphs,
                  const Eigen::MatrixXd& feats, int k_train_end, const TrainConfig& cfg,
                  int k_val_end) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(cfg.lr > 0.0) && cfg.lr != 0.0) throw ConfigError("lr must be nonnegative");
  if (k_train_end < 2 || k_train_end > graphs.partition.K)
    throw DataError("need at least 2 training intervals");
  int nonempty = 0;
  for (int k = 0; k < k_train_end; ++k)
    if (!graphs.graphs[k].empty()) ++nonempty;
  if (nonempty < 2) throw DataError("need at least 2 nonempty training interval graphs");
  if (cfg.early_stop && k_val_end <= k_train_end)
    throw ConfigError("early stopping needs a validation range");

  const int n = graphs.n_vertices;
  std::mt19937_64 neg_rng(rng::mix(cfg.seed ^ 0x6e65676174697665ULL));
  std::mt19937_64 val_rng(rng::mix(cfg.seed ^ 0x76616c6964617465ULL));

  TrainResult result;
  MemoryState mem = MemoryState::zero(n, cfg.model.d);
  NeighborStore nbrs = NeighborStore::empty(n, cfg.model.N);

  if (cfg.prior_score_bias) {
    double sum = 0.0;
    long count = 0;
    for (int k = 0; k < k_train_end; ++k)
      for (const Event& e : graphs.graphs[k]) {
        sum += e.score;
        ++count;
      }
    const double mean = std::clamp(sum / static_cast<double>(count), 1e-6, 1.0 - 1e-6);
    model.params().at("dec.b2").value.setConstant(std::log(mean / (1.0 - mean)));
  }

  double best_val_ap = -1.0;
  int since_best = 0;

  int batches_per_epoch = 0;
  for (int k = 1; k < k_train_end; ++k)
    if (!graphs.graphs[k].empty()) ++batches_per_epoch;
  const long warmup_steps = static_cast<long>(cfg.warmup_epochs) * batches_per_epoch;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.memory_reset_per_epoch || epoch == 1) {
      mem = MemoryState::zero(n, cfg.model.d);
      nbrs = NeighborStore::empty(n, cfg.model.N);
    }
    for (int k = 1; k < k_train_end; ++k) {
      const auto& pos = graphs.graphs[k];
      const auto& prev = graphs.graphs[k - 1];
      if (pos.empty()) {
        model.advance(mem, nbrs, prev);
        continue;
      }
      const auto negs = sample_negatives(pos, n, neg_rng);
      const double loss = model.lag_one_loss(mem, nbrs, prev, to_pairs(pos),
                                             to_pairs(negs), feats,
                                             graphs.partition.midpoint(k),
                                             /*with_grad=*/true, /*advance_state=*/true);
      if (cfg.clip_norm > 0.0) model.params().clip_grads(cfg.clip_norm);
      ++step;
      const double lr_eff =
          step <= warmup_steps
              ? cfg.lr * static_cast<double>(step) / static_cast<double>(warmup_steps)
              : cfg.lr;
      model.params().adam_step(lr_eff, 0.9, 0.999, 1e-8, cfg.weight_decay);
      result.trace.push_back(LossEntry{epoch, k, loss});
    }
    result.epochs_run = epoch;

    if (cfg.early_stop) {
      const double ap = validation_ap(model, graphs, feats, k_train_end, k_val_end, val_rng);
      if (ap > best_val_ap) {
        best_val_ap = ap;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }

  // Re-stream with the final parameters so the returned state is consistent
  // with the checkpoint.
  stream_memory(model, graphs, k_train_end, result.mem, result.nbrs);
  return result;
}

}  // namespace pairgraph
