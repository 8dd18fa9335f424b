#include "pairgraph/relation_graph.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pairgraph/errors.hpp"

namespace pairgraph {

IntervalPartition partition_horizon(int T, int K) {
  if (K < 1) throw DataError("interval count must be positive");
  if (T < 1) throw DataError("horizon must be positive");
  if (T % K != 0)
    throw DataError("K=" + std::to_string(K) + " does not divide T=" + std::to_string(T));
  IntervalPartition p;
  p.T = T;
  p.K = K;
  p.delta = static_cast<double>(T) / K;
  return p;
}

Eigen::VectorXd normalize_window(const Eigen::VectorXd& series) {
  if (series.size() == 0) throw DataError("empty window");
  if (!(series[0] > 0.0)) throw DataError("window must start with a positive price");
  return series / series[0];
}

double nhd_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw DataError("window length mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  if (a.size() < 2) throw DataError("window must have at least 2 ticks");
  const Eigen::VectorXd na = normalize_window(a);
  const Eigen::VectorXd nb = normalize_window(b);
  return (na - nb).array().square().mean();
}

double correlation_measure(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::exp(-nhd_distance(a, b));
}

TemporalGraphSequence build_temporal_graphs(const PriceSeriesSet& prices, int K,
                                            double gamma) {
  TemporalGraphSequence seq;
  seq.partition = partition_horizon(prices.n_ticks(), K);
  seq.n_vertices = prices.n_entities();
  seq.graphs.resize(K);
  const int delta = prices.n_ticks() / K;
  for (int k = 0; k < K; ++k) {
    const double t = seq.partition.midpoint(k);
    for (int i = 0; i < seq.n_vertices; ++i) {
      for (int j = i + 1; j < seq.n_vertices; ++j) {
        const double s = correlation_measure(prices.prices.row(i).segment(k * delta, delta),
                                             prices.prices.row(j).segment(k * delta, delta));
        if (s >= gamma) seq.graphs[k].push_back(Event{i, j, t, s});
      }
    }
  }
  return seq;
}

void write_events(const TemporalGraphSequence& graphs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "# n_vertices=" << graphs.n_vertices << " T=" << graphs.partition.T
      << " K=" << graphs.partition.K << '\n';
  out << "src,dst,t,score\n";
  char tbuf[64], sbuf[64];
  for (const auto& g : graphs.graphs)
    for (const auto& e : g) {
      std::snprintf(tbuf, sizeof tbuf, "%.17g", e.t);
      std::snprintf(sbuf, sizeof sbuf, "%.17g", e.score);
      out << e.src << ',' << e.dst << ',' << tbuf << ',' << sbuf << '\n';
    }
}

TemporalGraphSequence read_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open events file: " + path);

  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty events file", 1);
  ++lineno;
  int n = -1, T = -1, K = -1;
  if (std::sscanf(line.c_str(), "# n_vertices=%d T=%d K=%d", &n, &T, &K) != 3)
    throw ParseError("missing `# n_vertices=.. T=.. K=..` metadata line", lineno);

  if (!std::getline(in, line)) throw ParseError("missing header line", lineno + 1);
  ++lineno;
  if (line != "src,dst,t,score") throw ParseError("expected header `src,dst,t,score`", lineno);

  TemporalGraphSequence seq;
  seq.partition = partition_horizon(T, K);
  seq.n_vertices = n;
  seq.graphs.resize(K);

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Event e;
    char* end = nullptr;
    std::istringstream ss(line);
    std::string f0, f1, f2, f3;
    if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') ||
        !std::getline(ss, f2, ',') || !std::getline(ss, f3))
      throw ParseError("expected 4 fields `src,dst,t,score`", lineno);
    try {
      e.src = std::stoi(f0);
      e.dst = std::stoi(f1);
    } catch (const std::exception&) {
      throw ParseError("cannot parse vertex index", lineno);
    }
    e.t = std::strtod(f2.c_str(), &end);
    if (end == f2.c_str()) throw ParseError("cannot parse timestamp", lineno);
    e.score = std::strtod(f3.c_str(), &end);
    if (end == f3.c_str()) throw ParseError("cannot parse score", lineno);

    if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n || e.src >= e.dst)
      throw ParseError("event must have 0 <= src < dst < n_vertices", lineno);
    // timestamp must be an interval midpoint (k - 1/2) * delta
    const double kf = e.t / seq.partition.delta + 0.5;
    const int k = static_cast<int>(std::lround(kf)) - 1;
    if (k < 0 || k >= K || seq.partition.midpoint(k) != e.t)
      throw ParseError("timestamp is not an interval midpoint", lineno);
    seq.graphs[k].push_back(e);
  }
  return seq;
}

}  // namespace pairgraph
