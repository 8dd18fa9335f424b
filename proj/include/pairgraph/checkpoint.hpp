#pragma once

#include <string>

#include "pairgraph/model.hpp"
#include "pairgraph/trainer.hpp"

namespace pairgraph {

// Model checkpoint: config + variant + every parameter with its Adam state.
// JSON round trip is bit exact (doubles serialize shortest round-trip).
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// Training config JSON with keys {epochs, lr, weight_decay, seed, gamma, K,
// d, L, n_heads, N, d_time, decoder_hidden, early_stop}; every key optional,
// unknown keys rejected.
TrainConfig load_train_config(const std::string& path);
std::string train_config_json(const TrainConfig& cfg);

}  // namespace pairgraph
