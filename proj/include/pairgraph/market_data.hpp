#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace pairgraph {

// Aligned per-entity price series over a shared calendar. Row i of `prices`
// holds entity i; column t holds calendar tick t. All prices are strictly
// positive and the calendar is strictly increasing.
struct PriceSeriesSet {
  std::vector<std::string> calendar;
  std::vector<std::string> entities;
  Eigen::MatrixXd prices;  // [n_entities x n_ticks]

  int n_entities() const { return static_cast<int>(entities.size()); }
  int n_ticks() const { return static_cast<int>(calendar.size()); }
};

// Static per-entity feature vectors, row-aligned with PriceSeriesSet.
struct EntityFeatures {
  std::vector<std::string> entities;
  Eigen::MatrixXd vectors;  // [n_entities x d_feat]
};

struct SyntheticSpec {
  int n_entities = 20;
  int n_clusters = 2;
  int n_ticks = 480;
  double noise_sigma = 0.005;
  std::uint64_t seed = 0;
};

struct SyntheticMarket {
  PriceSeriesSet prices;
  EntityFeatures features;
  std::vector<int> cluster_of;  // cluster index per entity
};

// Loads a `date,ticker,close` CSV, drops entities missing more than 10% of
// calendar ticks, forward-fills remaining gaps (back-fills leading gaps) and
// sorts entities by id. Throws ParseError / DataError.
PriceSeriesSet load_prices(const std::string& path);

// Loads a `ticker,sector,market_cap` CSV for the given entities. Sector is
// one-hot encoded over the sectors seen in the file (lexicographic column
// order); market cap is log-transformed and z-scored with the population
// standard deviation. Column order: [sector one-hots..., log-cap z-score].
EntityFeatures encode_features(const std::string& path,
                               const std::vector<std::string>& entities);

// Deterministic synthetic market with planted correlated clusters. Each
// cluster follows a latent log-price random walk (increments of variance
// 0.01); entities add i.i.d. Normal(0, noise_sigma^2) log-noise per tick.
// Series are scaled to start at 100; features are the cluster one-hot.
// All randomness is counter-based off the seed.
SyntheticMarket generate_synthetic(const SyntheticSpec& spec);

void write_prices_csv(const PriceSeriesSet& prices, const std::string& path);
void write_features_csv(const std::vector<std::string>& entities,
                        const std::vector<int>& cluster_of, int n_clusters,
                        const std::string& path);
void write_clusters_csv(const std::vector<std::string>& entities,
                        const std::vector<int>& cluster_of,
                        const std::string& path);

namespace rng {

// splitmix64 mix; the basis of all counter-based randomness here.
std::uint64_t mix(std::uint64_t x);

// Standard normal derived from (seed, stream, index, counter) via Box-Muller.
double counter_normal(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t index, std::uint64_t counter);

}  // namespace rng

}  // namespace pairgraph
