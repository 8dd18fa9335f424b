// pairgraph: build correlation-event graphs from market data, train the
// temporal GNN link predictor, and evaluate future-correlation prediction.
//
// Exit codes: 0 success, 1 data/runtime error, 2 usage/config error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairgraph/checkpoint.hpp"
#include "pairgraph/errors.hpp"
#include "pairgraph/evaluator.hpp"
#include "pairgraph/market_data.hpp"
#include "pairgraph/model.hpp"
#include "pairgraph/relation_graph.hpp"
#include "pairgraph/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pairgraph;

namespace {

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

SplitSpec parse_split(const std::string& text) {
  int a = 0, b = 0, c = 0;
  if (std::sscanf(text.c_str(), "%d/%d/%d", &a, &b, &c) != 3 || a + b + c != 100 ||
      a <= 0 || b <= 0 || c <= 0)
    throw ConfigError("split must be of the form 60/20/20 and sum to 100");
  return SplitSpec{a / 100.0, b / 100.0, c / 100.0};
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const SyntheticMarket market = generate_synthetic(spec);
  write_prices_csv(market.prices, out_dir + "/prices.csv");
  write_features_csv(market.prices.entities, market.cluster_of, spec.n_clusters,
                     out_dir + "/features.csv");
  write_clusters_csv(market.prices.entities, market.cluster_of, out_dir + "/clusters.csv");
  std::cout << out_dir << '\n';
  return 0;
}

int cmd_build_graph(const std::string& prices_path, int K, double gamma,
                    const std::string& out_path) {
  const PriceSeriesSet prices = load_prices(prices_path);
  const TemporalGraphSequence graphs = build_temporal_graphs(prices, K, gamma);
  write_events(graphs, out_path);
  size_t n_events = 0;
  for (const auto& g : graphs.graphs) n_events += g.size();
  std::cout << "K=" << K << " gamma=" << gamma << " events=" << n_events << '\n';
  return 0;
}

Eigen::MatrixXd features_for(const EntityFeatures& feats, Variant variant, int n) {
  return variant == Variant::one_hot ? Eigen::MatrixXd::Identity(n, n) : feats.vectors;
}

int cmd_train(const std::string& events_path, const std::string& features_path,
              const std::string& config_path, const std::string& out_dir,
              const std::string& variant_str) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg = load_train_config(config_path);
  const Variant variant = variant_from_name(variant_str);

  const TemporalGraphSequence graphs = read_events(events_path);
  // features CSV rows are keyed by the same entity ordering the events index
  std::vector<std::string> entities;
  {
    std::ifstream in(features_path);
    if (!in) throw DataError("cannot open features file: " + features_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) entities.push_back(line.substr(0, line.find(',')));
    std::sort(entities.begin(), entities.end());
  }
  if (static_cast<int>(entities.size()) != graphs.n_vertices)
    throw DataError("features cover " + std::to_string(entities.size()) +
                    " entities but events expect " + std::to_string(graphs.n_vertices));
  const EntityFeatures feats = encode_features(features_path, entities);
  const Eigen::MatrixXd used = features_for(feats, variant, graphs.n_vertices);

  const Split split = split_intervals(graphs.partition.K);
  Model model(cfg.model, static_cast<int>(used.cols()), variant, cfg.seed);
  const TrainResult result = train(model, graphs, used, split.train_end, cfg,
                                   cfg.early_stop ? split.val_end : -1);

  fs::create_directories(out_dir);
  save_checkpoint(model, out_dir + "/checkpoint.json");
  {
    std::ofstream out(out_dir + "/loss.csv");
    out << "epoch,batch,loss\n";
    char buf[64];
    for (const auto& e : result.trace) {
      std::snprintf(buf, sizeof buf, "%.17g", e.loss);
      out << e.epoch << ',' << e.batch << ',' << buf << '\n';
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"config", json::parse(train_config_json(cfg))},
                   {"variant", variant_str},
                   {"seed", cfg.seed},
                   {"inputs",
                    {{"events", {{"path", events_path}, {"fnv1a", fnv1a_file(events_path)}}},
                     {"features",
                      {{"path", features_path}, {"fnv1a", fnv1a_file(features_path)}}}}},
                   {"artifacts",
                    {{"checkpoint", out_dir + "/checkpoint.json"},
                     {"loss_trace", out_dir + "/loss.csv"}}},
                   {"epochs_run", result.epochs_run},
                   {"duration_seconds", seconds}};
  std::ofstream(out_dir + "/manifest.json") << manifest.dump(2) << '\n';
  std::cout << out_dir << '\n';
  return 0;
}

int cmd_eval(const std::string& events_path, const std::string& features_path,
             const std::string& checkpoint_path, const std::string& split_str,
             const std::string& variant_str, bool all_pairs, std::uint64_t seed,
             const std::string& out_dir) {
  const TemporalGraphSequence graphs = read_events(events_path);
  const Split split = split_intervals(graphs.partition.K, parse_split(split_str));
  std::mt19937_64 rng(rng::mix(seed ^ 0x6576616c75617465ULL));

  MetricsReport report;
  if (variant_str == "persistence") {
    report = persistence_baseline(graphs, split.val_end, split.K, rng, all_pairs);
  } else {
    Model model = load_checkpoint(checkpoint_path);
    const Variant variant = model.variant();
    if (variant_str != "auto" && variant_from_name(variant_str) != variant)
      throw DataError("checkpoint was trained as `" + variant_name(variant) +
                      "` but --variant requests `" + variant_str + "`");

    std::vector<std::string> entities;
    {
      std::ifstream in(features_path);
      if (!in) throw DataError("cannot open features file: " + features_path);
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line))
        if (!line.empty()) entities.push_back(line.substr(0, line.find(',')));
      std::sort(entities.begin(), entities.end());
    }
    const EntityFeatures feats = encode_features(features_path, entities);
    const Eigen::MatrixXd used = features_for(feats, variant, graphs.n_vertices);
    if (static_cast<int>(used.cols()) != model.d_feat())
      throw DataError("feature dim " + std::to_string(used.cols()) +
                      " does not match checkpoint dim " + std::to_string(model.d_feat()));

    MemoryState mem;
    NeighborStore nbrs;
    stream_memory(model, graphs, split.val_end, mem, nbrs);
    report = evaluate(model, std::move(mem), std::move(nbrs), graphs, split.val_end,
                      split.K, used, rng, all_pairs);
  }

  fs::create_directories(out_dir);
  json per_interval = json::array();
  for (const auto& im : report.per_interval)
    per_interval.push_back({{"interval", im.interval},
                            {"ap", im.ap},
                            {"mape", im.mape},
                            {"n_pos", im.n_pos},
                            {"n_neg", im.n_neg}});
  json j = {{"ap", report.ap},
            {"mape", report.mape},
            {"n_pos", report.n_pos},
            {"n_neg", report.n_neg},
            {"per_interval", per_interval}};
  std::ofstream(out_dir + "/metrics.json") << j.dump(2) << '\n';
  {
    std::ofstream out(out_dir + "/per_interval.csv");
    out << "interval,ap,mape\n";
    for (const auto& im : report.per_interval)
      out << im.interval << ',' << im.ap << ',' << im.mape << '\n';
  }
  std::cout << "ap=" << report.ap << " mape=" << report.mape << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal correlation-graph pipeline"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_option("--seed", seed, "global seed");
  app.add_flag("--verbose", verbose, "verbose output");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic market");
  SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--entities", spec.n_entities, "number of entities");
  synth->add_option("--clusters", spec.n_clusters, "number of planted clusters");
  synth->add_option("--ticks", spec.n_ticks, "number of calendar ticks");
  synth->add_option("--noise", spec.noise_sigma, "idiosyncratic log-noise std");
  synth->add_option("--out", synth_out, "output directory")->required();

  // build-graph
  auto* build = app.add_subcommand("build-graph", "build the temporal event graphs");
  std::string prices_path, build_out;
  int K = 0;
  double gamma = 0.9;
  build->add_option("--prices", prices_path, "prices CSV")->required();
  build->add_option("--k", K, "number of intervals (must divide the tick count)")
      ->required();
  build->add_option("--gamma", gamma, "correlation threshold");
  build->add_option("--out", build_out, "output events CSV")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train the link predictor");
  std::string events_path, features_path, config_path, train_out, train_variant = "full";
  train_cmd->add_option("--events", events_path, "events CSV")->required();
  train_cmd->add_option("--features", features_path, "features CSV")->required();
  train_cmd->add_option("--config", config_path, "training config JSON")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--variant", train_variant, "full | one_hot | edgeless");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate on the test intervals");
  std::string eval_events, eval_features, checkpoint_path, split_str = "60/20/20";
  std::string eval_variant = "auto", eval_out;
  bool all_pairs = false;
  eval_cmd->add_option("--events", eval_events, "events CSV")->required();
  eval_cmd->add_option("--features", eval_features, "features CSV");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint JSON");
  eval_cmd->add_option("--split", split_str, "train/val/test percentages");
  eval_cmd->add_option("--variant", eval_variant,
                       "auto | full | one_hot | edgeless | persistence");
  eval_cmd->add_flag("--all-pairs", all_pairs, "score every pair instead of sampling");
  eval_cmd->add_option("--out", eval_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) {
      spec.seed = seed;
      return cmd_synth(spec, synth_out);
    }
    if (*build) return cmd_build_graph(prices_path, K, gamma, build_out);
    if (*train_cmd)
      return cmd_train(events_path, features_path, config_path, train_out, train_variant);
    if (*eval_cmd) {
      if (eval_variant != "persistence" && checkpoint_path.empty())
        throw ConfigError("--checkpoint is required unless --variant persistence");
      if (eval_variant != "persistence" && eval_features.empty())
        throw ConfigError("--features is required unless --variant persistence");
      return cmd_eval(eval_events, eval_features, checkpoint_path, split_str,
                      eval_variant, all_pairs, seed, eval_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
