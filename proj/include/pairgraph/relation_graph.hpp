#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pairgraph/market_data.hpp"

namespace pairgraph {

// Equal-length partition of the tick horizon [0, T) into K intervals.
struct IntervalPartition {
  int T = 0;
  int K = 0;
  double delta = 0.0;

  double start(int k) const { return k * delta; }        // k in [0, K)
  double end(int k) const { return (k + 1) * delta; }
  double midpoint(int k) const { return (k + 0.5) * delta; }  // edge timestamp
};

// One above-threshold correlated pair in one interval; undirected with
// canonical src < dst.
struct Event {
  int src = 0;
  int dst = 0;
  double t = 0.0;
  double score = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct TemporalGraphSequence {
  IntervalPartition partition;
  std::vector<std::vector<Event>> graphs;  // K event lists, sorted by (src, dst)
  int n_vertices = 0;
};

// Splits T ticks into K equal intervals; K must divide T exactly.
IntervalPartition partition_horizon(int T, int K);

// Cumulative gross return: p(t) / p(t0), first element exactly 1.
Eigen::VectorXd normalize_window(const Eigen::VectorXd& series);

// Mean squared deviation between the normalized series.
double nhd_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// S = exp(-nhd_distance); symmetric, scale invariant, in (0, 1],
// 1 iff the normalized series are identical.
double correlation_measure(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Algorithm: for each interval and each unordered pair, evaluates S over the
// interval window and emits an event iff S >= gamma.
TemporalGraphSequence build_temporal_graphs(const PriceSeriesSet& prices, int K,
                                            double gamma);

// Events CSV with a `# n_vertices=.. T=.. K=..` metadata line and header
// `src,dst,t,score`; scores serialized with 17 significant digits so the
// round trip is bit exact.
void write_events(const TemporalGraphSequence& graphs, const std::string& path);
TemporalGraphSequence read_events(const std::string& path);

}  // namespace pairgraph
