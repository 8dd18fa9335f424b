#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <random>

#include "pairgraph/errors.hpp"
#include "pairgraph/market_data.hpp"
#include "pairgraph/relation_graph.hpp"

using namespace pairgraph;

namespace {

// Independent brute-force oracle over every (pair, interval) cell.
std::vector<Event> brute_force_events(const PriceSeriesSet& ps, int K, double gamma) {
  std::vector<Event> out;
  const int delta = ps.n_ticks() / K;
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < ps.n_entities(); ++i)
      for (int j = i + 1; j < ps.n_entities(); ++j) {
        Eigen::VectorXd a = ps.prices.row(i).segment(k * delta, delta);
        Eigen::VectorXd b = ps.prices.row(j).segment(k * delta, delta);
        const double d = ((a / a[0]) - (b / b[0])).array().square().mean();
        const double s = std::exp(-d);
        if (s >= gamma) out.push_back(Event{i, j, (k + 0.5) * delta, s});
      }
  return out;
}

std::vector<Event> flatten(const TemporalGraphSequence& seq) {
  std::vector<Event> out;
  for (const auto& g : seq.graphs) out.insert(out.end(), g.begin(), g.end());
  return out;
}

PriceSeriesSet random_prices(int n, int T, std::mt19937_64& rng) {
  PriceSeriesSet ps;
  std::uniform_real_distribution<double> u(0.5, 2.0);
  ps.prices.resize(n, T);
  for (int i = 0; i < n; ++i) {
    ps.entities.push_back("E" + std::to_string(i));
    double p = 50.0 * u(rng);
    for (int t = 0; t < T; ++t) {
      p *= u(rng);
      ps.prices(i, t) = p;
    }
  }
  for (int t = 0; t < T; ++t) ps.calendar.push_back(std::to_string(t));
  return ps;
}

}  // namespace

TEST_CASE("partition_horizon") {
  const auto p = partition_horizon(10, 5);
  CHECK(p.delta == 2.0);
  CHECK(p.start(0) == 0.0);
  CHECK(p.end(4) == 10.0);
  CHECK(p.midpoint(0) == 1.0);

  const auto one = partition_horizon(6, 1);
  CHECK(one.delta == 6.0);

  CHECK_THROWS_AS(partition_horizon(10, 3), DataError);
}

TEST_CASE("normalize_window") {
  Eigen::VectorXd v(3);
  v << 100, 110, 121;
  Eigen::VectorXd n = normalize_window(v);
  CHECK(n[0] == 1.0);
  CHECK(n[1] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(n[2] == doctest::Approx(1.21).epsilon(1e-15));

  Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 5.0);
  CHECK(normalize_window(c) == Eigen::VectorXd::Ones(3));

  Eigen::VectorXd w(3);
  w << 2, 1, 4;
  Eigen::VectorXd nw = normalize_window(w);
  CHECK(nw[1] == 0.5);
  CHECK(nw[2] == 2.0);
}

TEST_CASE("correlation_measure: identity, scale invariance, hand value") {
  Eigen::VectorXd p(4);
  p << 3, 4, 5, 6;
  CHECK(correlation_measure(p, p) == 1.0);
  CHECK(correlation_measure(p, 2.5 * p) == 1.0);

  Eigen::VectorXd a(2), b(2);
  a << 100, 110;
  b << 100, 99;
  const double d = (0.0 + std::pow(1.1 - 0.99, 2)) / 2.0;
  CHECK(d == doctest::Approx(0.00605).epsilon(1e-12));
  CHECK(correlation_measure(a, b) == doctest::Approx(std::exp(-0.00605)).epsilon(1e-12));

  Eigen::VectorXd c(3);
  c << 1, 2, 3;
  CHECK_THROWS_AS(correlation_measure(p, c), DataError);
}

TEST_CASE("correlation_measure: symmetry and scale invariance on random pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> step(0.9, 1.1), u(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd a(8), b(8);
    a[0] = 100.0 * u(rng);
    b[0] = 100.0 * u(rng);
    for (int t = 1; t < 8; ++t) {
      a[t] = a[t - 1] * step(rng);
      b[t] = b[t - 1] * step(rng);
    }
    CHECK(correlation_measure(a, b) == correlation_measure(b, a));
    const double base = correlation_measure(a, b);
    const double scaled = correlation_measure(u(rng) * a, u(rng) * b);
    CHECK(std::abs(scaled - base) / base < 1e-12);
    CHECK(correlation_measure(a, b) > 0.0);
    CHECK(correlation_measure(a, b) <= 1.0);
  }
}

TEST_CASE("build_temporal_graphs: threshold extremes") {
  std::mt19937_64 rng(3);
  const auto ps = random_prices(5, 12, rng);

  const auto complete = build_temporal_graphs(ps, 4, 0.0);
  size_t total = 0;
  for (const auto& g : complete.graphs) total += g.size();
  CHECK(total == 4u * 10u);

  const auto empty = build_temporal_graphs(ps, 4, 1.01);
  for (const auto& g : empty.graphs) CHECK(g.empty());
}

TEST_CASE("build_temporal_graphs matches the brute-force oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> nu(2, 10), ku(1, 8);
  std::uniform_real_distribution<double> gu(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = nu(rng), K = ku(rng);
    const double gamma = gu(rng);
    const auto ps = random_prices(n, 4 * K, rng);
    const auto got = flatten(build_temporal_graphs(ps, K, gamma));
    const auto want = brute_force_events(ps, K, gamma);
    CHECK(got == want);
  }
}

TEST_CASE("threshold monotonicity: higher gamma yields a subset") {
  std::mt19937_64 rng(23);
  const auto ps = random_prices(6, 24, rng);
  const auto lo = flatten(build_temporal_graphs(ps, 4, 0.3));
  const auto hi = flatten(build_temporal_graphs(ps, 4, 0.7));
  for (const auto& e : hi)
    CHECK(std::find(lo.begin(), lo.end(), e) != lo.end());
  CHECK(hi.size() <= lo.size());
}

TEST_CASE("timestamps strictly increase across the sequence") {
  std::mt19937_64 rng(29);
  const auto seq = build_temporal_graphs(random_prices(4, 30, rng), 5, 0.0);
  double prev = -1.0;
  for (int k = 0; k < 5; ++k) {
    REQUIRE(!seq.graphs[k].empty());
    for (const auto& e : seq.graphs[k]) CHECK(e.t == seq.partition.midpoint(k));
    CHECK(seq.graphs[k].front().t > prev);
    prev = seq.graphs[k].front().t;
  }
}

TEST_CASE("write_events / read_events round-trips losslessly") {
  std::mt19937_64 rng(31);
  const auto seq = build_temporal_graphs(random_prices(5, 18, rng), 3, 0.2);
  const auto path = (std::filesystem::temp_directory_path() / "pg_events.csv").string();
  write_events(seq, path);
  const auto back = read_events(path);
  CHECK(back.n_vertices == seq.n_vertices);
  CHECK(back.partition.K == seq.partition.K);
  for (int k = 0; k < 3; ++k) CHECK(back.graphs[k] == seq.graphs[k]);
}

TEST_CASE("read_events: empty sequence and validation errors") {
  TemporalGraphSequence seq;
  seq.partition = partition_horizon(8, 2);
  seq.n_vertices = 3;
  seq.graphs.resize(2);
  const auto path = (std::filesystem::temp_directory_path() / "pg_events_empty.csv").string();
  write_events(seq, path);
  const auto back = read_events(path);
  CHECK(back.graphs[0].empty());
  CHECK(back.graphs[1].empty());

  std::ofstream out(path);
  out << "# n_vertices=3 T=8 K=2\nsrc,dst,t,score\n0,1,3.0,0.5\n";  // t not a midpoint
  out.close();
  CHECK_THROWS_AS(read_events(path), ParseError);
}
