#include "pairgraph/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pairgraph/errors.hpp"

namespace pairgraph {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, long line) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw ParseError("trailing characters in number '" + s + "'", line);
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError("cannot parse number '" + s + "'", line);
  } catch (const std::out_of_range&) {
    throw ParseError("number out of range '" + s + "'", line);
  }
}

// Civil-date helpers for synthetic calendars (days since 1970-01-01).
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", y + (m <= 2), m, d);
  return buf;
}

}  // namespace

namespace rng {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double counter_normal(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t index, std::uint64_t counter) {
  std::uint64_t key = mix(seed);
  key = mix(key ^ stream);
  key = mix(key ^ index);
  key = mix(key ^ counter);
  const std::uint64_t a = mix(key);
  const std::uint64_t b = mix(key ^ 0xda3e39cb94b95bdbULL);
  // map to (0,1); +0.5 keeps u1 away from 0 so the log is finite
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace rng

PriceSeriesSet load_prices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prices file: " + path);

  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty prices file: " + path, 1);
  ++lineno;

  std::set<std::string> dates;
  std::map<std::string, std::map<std::string, double>> by_ticker;  // ticker -> date -> close
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw ParseError("expected 3 fields `date,ticker,close`, got " +
                           std::to_string(fields.size()),
                       lineno);
    const std::string& date = fields[0];
    const std::string& ticker = fields[1];
    double close = parse_double(fields[2], lineno);
    if (!(close > 0.0))
      throw DataError("nonpositive price " + fields[2] + " for " + ticker + " on " + date);
    dates.insert(date);
    by_ticker[ticker][date] = close;
  }
  if (dates.empty()) throw DataError("prices file has no data rows: " + path);

  PriceSeriesSet out;
  out.calendar.assign(dates.begin(), dates.end());
  const int T = static_cast<int>(out.calendar.size());

  // Keep entities present on at least 90% of ticks.
  for (const auto& [ticker, series] : by_ticker) {
    const double missing = static_cast<double>(T - static_cast<int>(series.size())) / T;
    if (missing <= 0.10) out.entities.push_back(ticker);
  }
  if (out.entities.empty()) throw DataError("no entity survives the missing-data filter");

  out.prices.resize(static_cast<int>(out.entities.size()), T);
  for (int i = 0; i < out.n_entities(); ++i) {
    const auto& series = by_ticker[out.entities[i]];
    double last = -1.0;
    for (int t = 0; t < T; ++t) {
      auto it = series.find(out.calendar[t]);
      if (it != series.end()) last = it->second;
      out.prices(i, t) = last;  // forward-fill; leading gaps patched below
    }
    // back-fill leading gaps from the first observed value
    double first = -1.0;
    for (int t = 0; t < T; ++t) {
      if (out.prices(i, t) > 0.0) {
        first = out.prices(i, t);
        break;
      }
    }
    for (int t = 0; t < T && out.prices(i, t) <= 0.0; ++t) out.prices(i, t) = first;
  }
  return out;
}

EntityFeatures encode_features(const std::string& path,
                               const std::vector<std::string>& entities) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open features file: " + path);

  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty features file: " + path, 1);
  ++lineno;

  std::map<std::string, std::pair<std::string, double>> rows;  // ticker -> (sector, cap)
  std::set<std::string> sectors;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw ParseError("expected 3 fields `ticker,sector,market_cap`", lineno);
    double cap = parse_double(fields[2], lineno);
    if (!(cap > 0.0)) throw DataError("nonpositive market cap for " + fields[0]);
    rows[fields[0]] = {fields[1], cap};
    sectors.insert(fields[1]);
  }

  const int n = static_cast<int>(entities.size());
  std::vector<std::string> sector_order(sectors.begin(), sectors.end());
  const int n_sec = static_cast<int>(sector_order.size());

  Eigen::VectorXd log_caps(n);
  EntityFeatures out;
  out.entities = entities;
  out.vectors = Eigen::MatrixXd::Zero(n, n_sec + 1);
  for (int i = 0; i < n; ++i) {
    auto it = rows.find(entities[i]);
    if (it == rows.end())
      throw DataError("entity missing from features file: " + entities[i]);
    const auto& [sector, cap] = it->second;
    int col = static_cast<int>(std::lower_bound(sector_order.begin(), sector_order.end(),
                                                sector) -
                               sector_order.begin());
    out.vectors(i, col) = 1.0;
    log_caps[i] = std::log(cap);
  }

  const double mean = log_caps.mean();
  const double var = (log_caps.array() - mean).square().mean();
  const double sd = std::sqrt(var);
  for (int i = 0; i < n; ++i)
    out.vectors(i, n_sec) = sd > 0.0 ? (log_caps[i] - mean) / sd : 0.0;
  return out;
}

SyntheticMarket generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_entities < 1 || spec.n_clusters < 1 || spec.n_clusters > spec.n_entities ||
      spec.n_ticks < 2 || spec.noise_sigma < 0.0)
    throw DataError("invalid synthetic spec");

  const int n = spec.n_entities, C = spec.n_clusters, T = spec.n_ticks;
  constexpr double kWalkSigma = 0.1;  // increment std, variance 0.01

  Eigen::MatrixXd latent = Eigen::MatrixXd::Zero(C, T);
  for (int c = 0; c < C; ++c)
    for (int t = 1; t < T; ++t)
      latent(c, t) = latent(c, t - 1) +
                     kWalkSigma * rng::counter_normal(spec.seed, /*stream=*/1, c, t);

  SyntheticMarket out;
  out.cluster_of.resize(n);
  out.prices.prices.resize(n, T);
  for (int i = 0; i < n; ++i) {
    const int c = i % C;
    out.cluster_of[i] = c;
    Eigen::VectorXd logp(T);
    for (int t = 0; t < T; ++t)
      logp[t] = latent(c, t) +
                spec.noise_sigma * rng::counter_normal(spec.seed, /*stream=*/2, i, t);
    for (int t = 0; t < T; ++t)
      out.prices.prices(i, t) = 100.0 * std::exp(logp[t] - logp[0]);
  }

  const int width = std::max(3, static_cast<int>(std::to_string(n - 1).size()));
  const long day0 = days_from_civil(2015, 1, 1);
  out.prices.calendar.reserve(T);
  for (int t = 0; t < T; ++t) out.prices.calendar.push_back(civil_from_days(day0 + t));
  for (int i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "E%0*d", width, i);
    out.prices.entities.emplace_back(buf);
  }

  out.features.entities = out.prices.entities;
  out.features.vectors = Eigen::MatrixXd::Zero(n, C);
  for (int i = 0; i < n; ++i) out.features.vectors(i, out.cluster_of[i]) = 1.0;
  return out;
}

void write_prices_csv(const PriceSeriesSet& prices, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "date,ticker,close\n";
  char buf[64];
  for (int i = 0; i < prices.n_entities(); ++i)
    for (int t = 0; t < prices.n_ticks(); ++t) {
      std::snprintf(buf, sizeof buf, "%.17g", prices.prices(i, t));
      out << prices.calendar[t] << ',' << prices.entities[i] << ',' << buf << '\n';
    }
}

void write_features_csv(const std::vector<std::string>& entities,
                        const std::vector<int>& cluster_of, int n_clusters,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "ticker,sector,market_cap\n";
  (void)n_clusters;
  for (size_t i = 0; i < entities.size(); ++i)
    out << entities[i] << ",C" << cluster_of[i] << ",1000000\n";
}

void write_clusters_csv(const std::vector<std::string>& entities,
                        const std::vector<int>& cluster_of,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "ticker,cluster\n";
  for (size_t i = 0; i < entities.size(); ++i)
    out << entities[i] << ',' << cluster_of[i] << '\n';
}

}  // namespace pairgraph
