#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pairgraph/layers.hpp"
#include "pairgraph/relation_graph.hpp"

namespace pairgraph {

enum class Variant { full, one_hot, edgeless };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  int d = 32;              // memory / embedding dim
  int L = 1;               // attention layers
  int n_heads = 2;
  int N = 10;              // neighbor budget per vertex
  int d_time = 32;         // time-encoding dim
  int decoder_hidden = 64;
};

// Per-vertex memory vectors and last-event times.
struct MemoryState {
  Eigen::MatrixXd s;           // n x d, zero at init
  Eigen::VectorXd last_update; // n, zero at init
  std::vector<Event> pending;  // most recent raw batch not yet applied

  static MemoryState zero(int n_vertices, int d);
};

// Ring buffer of the most recent N events per vertex; both endpoints of an
// undirected event record it.
struct NeighborStore {
  struct Entry {
    int nbr;
    double score;
    double t;
    long insertion;
  };

  std::vector<std::vector<Entry>> buf;
  int capacity = 0;
  long next_insertion = 0;

  static NeighborStore empty(int n_vertices, int capacity);
  void ingest(std::span<const Event> batch);
};

// Memory-based temporal GNN: identity messages, GRU memory, L-layer temporal
// attention over recent neighbors, MLP + sigmoid link decoder.
class Model {
 public:
  struct Message {
    int vertex;
    ad::Var vec;
    double t;
    long insertion;
  };

  Model(ModelConfig cfg, int d_feat, Variant variant, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  int d_feat() const { return d_feat_; }
  Variant variant() const { return variant_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }

  // m_i = concat(s_i, s_j, score, psi(t - t_i')) for each endpoint of each event.
  std::vector<Message> compute_messages(ad::Tape& t, const ParamVars& pv,
                                        const MemoryState& mem,
                                        std::span<const Event> batch) const;

  // Keeps, per vertex, the message with the largest timestamp; ties go to the
  // largest insertion index.
  static std::vector<Message> aggregate_recent(const std::vector<Message>& messages);

  // GRU update on the tape for every messaged vertex.
  std::map<int, ad::Var> update_memory_taped(ad::Tape& t, const ParamVars& pv,
                                             const MemoryState& mem,
                                             const std::vector<Message>& aggregated) const;

  // Embeddings of all vertices at query time t; rows in `s_new` override the
  // stored memory values.
  std::vector<ad::Var> embed_all(ad::Tape& t, const ParamVars& pv, const MemoryState& mem,
                                 const std::map<int, ad::Var>& s_new,
                                 const Eigen::MatrixXd& feats, const NeighborStore& nbrs,
                                 double t_query) const;

  ad::Var decode_taped(ad::Tape& t, const ParamVars& pv, ad::Var z_i, ad::Var z_j) const;

  // Value-level stream step: messages -> aggregate -> GRU -> neighbor ingest.
  void advance(MemoryState& mem, NeighborStore& nbrs, std::span<const Event> batch) const;

  // Embedding matrix (n x d) from the current state, no gradients.
  Eigen::MatrixXd embed_values(const MemoryState& mem, const NeighborStore& nbrs,
                               const Eigen::MatrixXd& feats, double t_query) const;

  // Link probabilities for canonicalized pairs from the current state.
  std::vector<double> score_pairs(const MemoryState& mem, const NeighborStore& nbrs,
                                  std::span<const std::pair<int, int>> pairs,
                                  const Eigen::MatrixXd& feats, double t_query) const;

  // One lag-one training step: applies `prev_batch` to memory on the tape,
  // embeds at t_query, decodes positive/negative pairs, accumulates the mean
  // per-pair loss gradient into the store when `with_grad`, and advances the
  // stream state when `advance_state`. Returns the mean per-pair loss.
  double lag_one_loss(MemoryState& mem, NeighborStore& nbrs,
                      std::span<const Event> prev_batch,
                      std::span<const std::pair<int, int>> pos_pairs,
                      std::span<const std::pair<int, int>> neg_pairs,
                      const Eigen::MatrixXd& feats, double t_query, bool with_grad,
                      bool advance_state);

 private:
  layers::GruVars gru_vars(const ParamVars& pv) const;
  layers::MhaVars mha_vars(const ParamVars& pv, int layer) const;

  ModelConfig cfg_;
  int d_feat_ = 0;
  Variant variant_ = Variant::full;
  ParameterStore store_;
};

}  // namespace pairgraph
