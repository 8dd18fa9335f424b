#include "pairgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pairgraph/errors.hpp"

namespace pairgraph {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::one_hot: return "one_hot";
    case Variant::edgeless: return "edgeless";
  }
  throw ConfigError("unknown variant");
}

Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "one_hot") return Variant::one_hot;
  if (name == "edgeless") return Variant::edgeless;
  throw ConfigError("unknown variant: " + name);
}

MemoryState MemoryState::zero(int n_vertices, int d) {
  MemoryState m;
  m.s = Eigen::MatrixXd::Zero(n_vertices, d);
  m.last_update = Eigen::VectorXd::Zero(n_vertices);
  return m;
}

NeighborStore NeighborStore::empty(int n_vertices, int capacity) {
  NeighborStore n;
  n.buf.resize(n_vertices);
  n.capacity = capacity;
  return n;
}

void NeighborStore::ingest(std::span<const Event> batch) {
  for (const Event& e : batch) {
    const long ins = next_insertion++;
    buf.at(e.src).push_back(Entry{e.dst, e.score, e.t, ins});
    buf.at(e.dst).push_back(Entry{e.src, e.score, e.t, ins});
    for (int v : {e.src, e.dst})
      if (static_cast<int>(buf[v].size()) > capacity)
        buf[v].erase(buf[v].begin(), buf[v].end() - capacity);
  }
}

Model::Model(ModelConfig cfg, int d_feat, Variant variant, std::uint64_t seed)
    : cfg_(cfg), d_feat_(d_feat), variant_(variant) {
  if (cfg_.d < 1 || cfg_.L < 1 || cfg_.n_heads < 1 || cfg_.N < 1 || cfg_.d_time < 1 ||
      cfg_.decoder_hidden < 1)
    throw ConfigError("model dims must be positive");
  if (cfg_.d % cfg_.n_heads != 0)
    throw ConfigError("embedding dim must be divisible by n_heads");

  std::mt19937_64 rng(seed);
  const int d = cfg_.d, dt = cfg_.d_time;
  const int msg_dim = 2 * d + 1 + dt;

  store_.add("time.omega", init::time_frequencies(dt));
  store_.add("time.phi", Eigen::VectorXd::Zero(dt));

  store_.add("feat.W", init::xavier_uniform(d, d_feat_, rng));
  store_.add("feat.b", Eigen::VectorXd::Zero(d));

  for (const char* g : {"z", "r", "h"}) {
    store_.add(std::string("gru.W") + g, init::xavier_uniform(d, msg_dim, rng));
    store_.add(std::string("gru.U") + g, init::xavier_uniform(d, d, rng));
    store_.add(std::string("gru.b") + g, Eigen::VectorXd::Zero(d));
  }

  const int q_dim = d + dt;       // z || psi(0)
  const int kv_dim = d + 1 + dt;  // z_nbr || score || psi(t - t_nbr)
  for (int l = 1; l <= cfg_.L; ++l) {
    const std::string a = "attn" + std::to_string(l);
    store_.add(a + ".Wq", init::xavier_uniform(d, q_dim, rng));
    store_.add(a + ".Wk", init::xavier_uniform(d, kv_dim, rng));
    store_.add(a + ".Wv", init::xavier_uniform(d, kv_dim, rng));
    store_.add(a + ".Wo", init::xavier_uniform(d, d, rng));
    const std::string m = "mlp" + std::to_string(l);
    // near-identity passthrough of z^{l-1} plus a small random read of the
    // attention summary: the layer starts as a benign residual-like map, and
    // the positive bias keeps ReLU units recoverable. A plain Xavier init here
    // lets early training zero the whole embedding path (dead-ReLU collapse).
    Eigen::MatrixXd mix = 0.1 * init::xavier_uniform(d, 2 * d, rng);
    mix.leftCols(d) += Eigen::MatrixXd::Identity(d, d);
    store_.add(m + ".W", std::move(mix));
    store_.add(m + ".b", Eigen::VectorXd::Constant(d, 0.1));
  }

  store_.add("dec.W1", init::xavier_uniform(cfg_.decoder_hidden, 2 * d, rng));
  store_.add("dec.b1", Eigen::VectorXd::Zero(cfg_.decoder_hidden));
  store_.add("dec.W2", init::xavier_uniform(1, cfg_.decoder_hidden, rng));
  store_.add("dec.b2", Eigen::VectorXd::Zero(1));
}

layers::GruVars Model::gru_vars(const ParamVars& pv) const {
  return {pv["gru.Wz"], pv["gru.Uz"], pv["gru.bz"], pv["gru.Wr"], pv["gru.Ur"],
          pv["gru.br"], pv["gru.Wh"], pv["gru.Uh"], pv["gru.bh"]};
}

layers::MhaVars Model::mha_vars(const ParamVars& pv, int layer) const {
  const std::string a = "attn" + std::to_string(layer);
  return {pv[a + ".Wq"], pv[a + ".Wk"], pv[a + ".Wv"], pv[a + ".Wo"]};
}

std::vector<Model::Message> Model::compute_messages(ad::Tape& t, const ParamVars& pv,
                                                    const MemoryState& mem,
                                                    std::span<const Event> batch) const {
  const int n = static_cast<int>(mem.s.rows());
  std::vector<Message> out;
  out.reserve(batch.size() * 2);
  long insertion = 0;
  ad::Var omega = pv["time.omega"], phi = pv["time.phi"];
  for (const Event& e : batch) {
    if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n)
      throw DataError("event touches unknown vertex " +
                      std::to_string(std::max(e.src, e.dst)));
    ad::Var s_src = t.leaf(mem.s.row(e.src).transpose());
    ad::Var s_dst = t.leaf(mem.s.row(e.dst).transpose());
    ad::Var score = t.scalar(e.score);
    for (auto [a, b, va, vb] :
         {std::tuple{e.src, e.dst, s_src, s_dst}, std::tuple{e.dst, e.src, s_dst, s_src}}) {
      ad::Var psi = layers::time_encode(t, omega, phi, e.t - mem.last_update[a]);
      ad::Var parts[] = {va, vb, score, psi};
      out.push_back(Message{a, t.concat(parts), e.t, insertion++});
    }
  }
  return out;
}

std::vector<Model::Message> Model::aggregate_recent(const std::vector<Message>& messages) {
  std::map<int, const Message*> latest;
  for (const Message& m : messages) {
    auto [it, inserted] = latest.emplace(m.vertex, &m);
    if (!inserted && (m.t > it->second->t ||
                      (m.t == it->second->t && m.insertion > it->second->insertion)))
      it->second = &m;
  }
  std::vector<Message> out;
  out.reserve(latest.size());
  for (const auto& [v, m] : latest) out.push_back(*m);
  return out;
}

std::map<int, ad::Var> Model::update_memory_taped(ad::Tape& t, const ParamVars& pv,
                                                  const MemoryState& mem,
                                                  const std::vector<Message>& aggregated) const {
  const layers::GruVars gru = gru_vars(pv);
  std::map<int, ad::Var> out;
  for (const Message& m : aggregated) {
    ad::Var s_prev = t.leaf(mem.s.row(m.vertex).transpose());
    out[m.vertex] = layers::gru_cell(t, gru, m.vec, s_prev);
  }
  return out;
}

std::vector<ad::Var> Model::embed_all(ad::Tape& t, const ParamVars& pv,
                                      const MemoryState& mem,
                                      const std::map<int, ad::Var>& s_new,
                                      const Eigen::MatrixXd& feats,
                                      const NeighborStore& nbrs, double t_query) const {
  const int n = static_cast<int>(mem.s.rows());
  if (variant_ != Variant::edgeless && feats.rows() != n)
    throw ShapeError("feature matrix has " + std::to_string(feats.rows()) +
                     " rows for " + std::to_string(n) + " vertices");

  std::vector<ad::Var> z(n);
  for (int i = 0; i < n; ++i) {
    ad::Var s = s_new.count(i) ? s_new.at(i) : t.leaf(mem.s.row(i).transpose());
    if (variant_ == Variant::edgeless) {
      z[i] = s;  // memory only; feature projection and attention bypassed
    } else {
      ad::Var x = t.leaf(feats.row(i).transpose());
      z[i] = t.add(s, layers::linear(t, pv["feat.W"], pv["feat.b"], x));
    }
  }
  if (variant_ == Variant::edgeless) return z;

  ad::Var omega = pv["time.omega"], phi = pv["time.phi"];
  ad::Var psi0 = layers::time_encode(t, omega, phi, 0.0);
  ad::Var zero_summary = t.leaf(Eigen::VectorXd::Zero(cfg_.d));

  for (int l = 1; l <= cfg_.L; ++l) {
    const layers::MhaVars mha = mha_vars(pv, l);
    ad::Var mlp_W = pv["mlp" + std::to_string(l) + ".W"];
    ad::Var mlp_b = pv["mlp" + std::to_string(l) + ".b"];
    std::vector<ad::Var> next(n);
    for (int i = 0; i < n; ++i) {
      const auto& entries = nbrs.buf.at(i);
      ad::Var summary;
      if (entries.empty()) {
        summary = zero_summary;
      } else {
        ad::Var q_parts[] = {z[i], psi0};
        ad::Var q = t.concat(q_parts);
        std::vector<ad::Var> rows;
        rows.reserve(entries.size());
        for (const auto& e : entries) {
          ad::Var psi = layers::time_encode(t, omega, phi, t_query - e.t);
          ad::Var row_parts[] = {z[e.nbr], t.scalar(e.score), psi};
          rows.push_back(t.concat(row_parts));
        }
        summary = layers::multi_head_attention(t, mha, q, rows, rows, cfg_.n_heads);
      }
      ad::Var in_parts[] = {z[i], summary};
      next[i] = t.relu(layers::linear(t, mlp_W, mlp_b, t.concat(in_parts)));
    }
    z = std::move(next);
  }
  return z;
}

ad::Var Model::decode_taped(ad::Tape& t, const ParamVars& pv, ad::Var z_i, ad::Var z_j) const {
  ad::Var parts[] = {z_i, z_j};
  return t.sigmoid(layers::mlp2(t, pv["dec.W1"], pv["dec.b1"], pv["dec.W2"], pv["dec.b2"],
                                t.concat(parts)));
}

void Model::advance(MemoryState& mem, NeighborStore& nbrs,
                    std::span<const Event> batch) const {
  if (!batch.empty()) {
    ad::Tape tape;
    ParamVars pv(tape, store_);
    // store is logically const here; tape only reads values
    auto msgs = compute_messages(tape, pv, mem, batch);
    auto agg = aggregate_recent(msgs);
    auto s_new = update_memory_taped(tape, pv, mem, agg);
    for (const Message& m : agg) {
      mem.s.row(m.vertex) = tape.val(s_new.at(m.vertex)).col(0).transpose();
      mem.last_update[m.vertex] = m.t;
    }
  }
  nbrs.ingest(batch);
  mem.pending.assign(batch.begin(), batch.end());
}

Eigen::MatrixXd Model::embed_values(const MemoryState& mem, const NeighborStore& nbrs,
                                    const Eigen::MatrixXd& feats, double t_query) const {
  ad::Tape tape;
  ParamVars pv(tape, store_);
  auto z = embed_all(tape, pv, mem, {}, feats, nbrs, t_query);
  Eigen::MatrixXd out(mem.s.rows(), cfg_.d);
  for (size_t i = 0; i < z.size(); ++i) out.row(i) = tape.val(z[i]).col(0).transpose();
  return out;
}

std::vector<double> Model::score_pairs(const MemoryState& mem, const NeighborStore& nbrs,
                                       std::span<const std::pair<int, int>> pairs,
                                       const Eigen::MatrixXd& feats, double t_query) const {
  ad::Tape tape;
  ParamVars pv(tape, store_);
  auto z = embed_all(tape, pv, mem, {}, feats, nbrs, t_query);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    const int i = std::min(a, b), j = std::max(a, b);
    out.push_back(tape.val(decode_taped(tape, pv, z.at(i), z.at(j)))(0, 0));
  }
  return out;
}

double Model::lag_one_loss(MemoryState& mem, NeighborStore& nbrs,
                           std::span<const Event> prev_batch,
                           std::span<const std::pair<int, int>> pos_pairs,
                           std::span<const std::pair<int, int>> neg_pairs,
                           const Eigen::MatrixXd& feats, double t_query, bool with_grad,
                           bool advance_state) {
  if (pos_pairs.size() != neg_pairs.size())
    throw ShapeError("positive and negative pair counts differ");

  ad::Tape tape;
  ParamVars pv(tape, store_);
  auto msgs = compute_messages(tape, pv, mem, prev_batch);
  auto agg = aggregate_recent(msgs);
  auto s_new = update_memory_taped(tape, pv, mem, agg);

  NeighborStore nbrs_after = nbrs;
  nbrs_after.ingest(prev_batch);

  auto z = embed_all(tape, pv, mem, s_new, feats, nbrs_after, t_query);

  std::vector<ad::Var> terms;
  terms.reserve(pos_pairs.size());
  for (size_t p = 0; p < pos_pairs.size(); ++p) {
    auto decode_pair = [&](std::pair<int, int> pr) {
      const int i = std::min(pr.first, pr.second), j = std::max(pr.first, pr.second);
      return decode_taped(tape, pv, z.at(i), z.at(j));
    };
    terms.push_back(layers::bce_pair_loss(tape, decode_pair(pos_pairs[p]),
                                          decode_pair(neg_pairs[p])));
  }
  ad::Var loss = tape.affine(tape.sum(terms), 1.0 / static_cast<double>(terms.size()), 0.0);

  if (with_grad) {
    tape.backward(loss);
    pv.extract_grads(tape, store_);
  }

  if (advance_state) {
    for (const Message& m : agg) {
      mem.s.row(m.vertex) = tape.val(s_new.at(m.vertex)).col(0).transpose();
      mem.last_update[m.vertex] = m.t;
    }
    nbrs = std::move(nbrs_after);
    mem.pending.assign(prev_batch.begin(), prev_batch.end());
  }
  return tape.val(loss)(0, 0);
}

}  // namespace pairgraph
