#include "pairgraph/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "pairgraph/errors.hpp"

namespace pairgraph {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json values = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", values}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto& values = j.at("values");
  if (static_cast<long>(values.size()) != static_cast<long>(rows) * cols)
    throw ParseError("checkpoint matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  long idx = 0;
  for (int i = 0; i < rows; ++i)
    for (int j2 = 0; j2 < cols; ++j2) m(i, j2) = values.at(idx++).get<double>();
  return m;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  const ModelConfig& c = model.config();
  json j;
  j["format"] = "pairgraph-checkpoint-v1";
  j["config"] = {{"d", c.d},           {"L", c.L},
                 {"n_heads", c.n_heads}, {"N", c.N},
                 {"d_time", c.d_time}, {"decoder_hidden", c.decoder_hidden}};
  j["d_feat"] = model.d_feat();
  j["variant"] = variant_name(model.variant());
  j["step"] = model.params().step_count();
  json params = json::object();
  for (const auto& [name, p] : model.params().all())
    params[name] = {{"value", matrix_to_json(p.value)},
                    {"m", matrix_to_json(p.m)},
                    {"v", matrix_to_json(p.v)}};
  j["params"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
  }
  if (j.value("format", "") != "pairgraph-checkpoint-v1")
    throw ParseError("unrecognized checkpoint format");

  ModelConfig c;
  const json& jc = j.at("config");
  c.d = jc.at("d").get<int>();
  c.L = jc.at("L").get<int>();
  c.n_heads = jc.at("n_heads").get<int>();
  c.N = jc.at("N").get<int>();
  c.d_time = jc.at("d_time").get<int>();
  c.decoder_hidden = jc.at("decoder_hidden").get<int>();

  Model model(c, j.at("d_feat").get<int>(), variant_from_name(j.at("variant").get<std::string>()),
              /*seed=*/0);
  model.params().set_step_count(j.at("step").get<std::int64_t>());
  for (auto& [name, p] : model.params().all()) {
    if (!j.at("params").contains(name))
      throw ParseError("checkpoint missing parameter: " + name);
    const json& jp = j.at("params").at(name);
    Eigen::MatrixXd value = matrix_from_json(jp.at("value"));
    if (value.rows() != p.value.rows() || value.cols() != p.value.cols())
      throw ParseError("checkpoint shape mismatch for parameter: " + name);
    p.value = std::move(value);
    p.m = matrix_from_json(jp.at("m"));
    p.v = matrix_from_json(jp.at("v"));
  }
  return model;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  static const std::vector<std::string> known = {
      "epochs", "lr",      "weight_decay", "seed",           "gamma",
      "K",      "d",       "L",            "n_heads",        "N",
      "d_time", "decoder_hidden", "early_stop", "memory_reset_per_epoch",
      "clip_norm", "warmup_epochs", "prior_score_bias"};
  for (const auto& [key, val] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key: " + key);

  TrainConfig cfg;
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.K = j.value("K", cfg.K);
  cfg.model.d = j.value("d", cfg.model.d);
  cfg.model.L = j.value("L", cfg.model.L);
  cfg.model.n_heads = j.value("n_heads", cfg.model.n_heads);
  cfg.model.N = j.value("N", cfg.model.N);
  cfg.model.d_time = j.value("d_time", cfg.model.d_time);
  cfg.model.decoder_hidden = j.value("decoder_hidden", cfg.model.decoder_hidden);
  cfg.early_stop = j.value("early_stop", cfg.early_stop);
  cfg.memory_reset_per_epoch = j.value("memory_reset_per_epoch", cfg.memory_reset_per_epoch);
  cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
  cfg.warmup_epochs = j.value("warmup_epochs", cfg.warmup_epochs);
  cfg.prior_score_bias = j.value("prior_score_bias", cfg.prior_score_bias);
  if (cfg.epochs < 1) throw ConfigError("config key epochs must be >= 1");
  if (cfg.clip_norm < 0.0) throw ConfigError("config key clip_norm must be >= 0");
  if (cfg.warmup_epochs < 0) throw ConfigError("config key warmup_epochs must be >= 0");
  if (!(cfg.lr > 0.0)) throw ConfigError("config key lr must be positive");
  return cfg;
}

std::string train_config_json(const TrainConfig& cfg) {
  json j = {{"epochs", cfg.epochs},
            {"lr", cfg.lr},
            {"weight_decay", cfg.weight_decay},
            {"seed", cfg.seed},
            {"gamma", cfg.gamma},
            {"K", cfg.K},
            {"d", cfg.model.d},
            {"L", cfg.model.L},
            {"n_heads", cfg.model.n_heads},
            {"N", cfg.model.N},
            {"d_time", cfg.model.d_time},
            {"decoder_hidden", cfg.model.decoder_hidden},
            {"early_stop", cfg.early_stop},
            {"memory_reset_per_epoch", cfg.memory_reset_per_epoch},
            {"clip_norm", cfg.clip_norm},
            {"warmup_epochs", cfg.warmup_epochs},
            {"prior_score_bias", cfg.prior_score_bias}};
  return j.dump(2);
}

}  // namespace pairgraph
