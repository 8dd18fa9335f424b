#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pairgraph/autodiff.hpp"

namespace pairgraph {

// Named learnable tensors with gradient slots and Adam moment buffers.
class ParameterStore {
 public:
  struct Param {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    Eigen::MatrixXd m;  // first moment
    Eigen::MatrixXd v;  // second moment
    bool has_grad = false;
  };

  void add(const std::string& name, Eigen::MatrixXd init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  const std::map<std::string, Param>& all() const { return params_; }
  std::map<std::string, Param>& all() { return params_; }

  void zero_grads();
  // Rescales all gradients so their global L2 norm is at most max_norm.
  void clip_grads(double max_norm);
  // Bias-corrected Adam; weight decay is an L2 term added to the gradient
  // before the moment update. Gradients are zeroed afterward.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8, double weight_decay = 0.0);

  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }

 private:
  std::map<std::string, Param> params_;
  std::int64_t step_ = 0;
};

namespace init {
Eigen::MatrixXd xavier_uniform(int rows, int cols, std::mt19937_64& rng);
// Geometric frequency ladder omega_k = 10^{-4(k-1)/(d-1)}.
Eigen::VectorXd time_frequencies(int d);
}  // namespace init

// Binds every parameter in a store to leaf Vars on one tape and copies leaf
// gradients back after the backward sweep.
class ParamVars {
 public:
  ParamVars(ad::Tape& tape, const ParameterStore& store);
  ad::Var operator[](const std::string& name) const;
  void extract_grads(const ad::Tape& tape, ParameterStore& store) const;

 private:
  std::map<std::string, ad::Var> vars_;
};

namespace layers {

// psi(dt): component k is cos(omega_k * dt + phi_k).
ad::Var time_encode(ad::Tape& t, ad::Var omega, ad::Var phi, double dt);

// W x + b
ad::Var linear(ad::Tape& t, ad::Var W, ad::Var b, ad::Var x);

struct GruVars {
  ad::Var Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
};

// z = sigma(Wz m + Uz s + bz); r = sigma(Wr m + Ur s + br);
// h = tanh(Wh m + Uh (r . s) + bh); s' = (1 - z) . h + z . s
ad::Var gru_cell(ad::Tape& t, const GruVars& p, ad::Var m, ad::Var s_prev);

struct MhaVars {
  ad::Var Wq, Wk, Wv, Wo;
};

// Multi-head scaled dot-product attention of a single query over N key/value
// rows; the projected dimension is Wq's row count, split across heads.
ad::Var multi_head_attention(ad::Tape& t, const MhaVars& p, ad::Var q,
                             const std::vector<ad::Var>& keys,
                             const std::vector<ad::Var>& values, int n_heads);

// layer2(ReLU(layer1(x)))
ad::Var mlp2(ad::Tape& t, ad::Var W1, ad::Var b1, ad::Var W2, ad::Var b2, ad::Var x);

// -log(p_pos) - log(1 - p_neg), probabilities clamped to [1e-12, 1 - 1e-12].
ad::Var bce_pair_loss(ad::Tape& t, ad::Var p_pos, ad::Var p_neg);

}  // namespace layers

// Compares reverse-mode gradients against central finite differences.
// `f(store, with_grad)` returns the loss; when with_grad it must also leave
// gradients in the store. Returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-6); the floor absorbs central-difference
// round-off on near-zero gradients.
double grad_check(const std::function<double(ParameterStore&, bool)>& f,
                  ParameterStore& store, double h = 1e-5);

}  // namespace pairgraph
