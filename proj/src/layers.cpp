#include "pairgraph/layers.hpp"

#include <cmath>

#include "pairgraph/errors.hpp"

namespace pairgraph {

void ParameterStore::add(const std::string& name, Eigen::MatrixXd init) {
  if (params_.count(name)) throw ConfigError("duplicate parameter: " + name);
  Param p;
  p.grad = Eigen::MatrixXd::Zero(init.rows(), init.cols());
  p.m = p.grad;
  p.v = p.grad;
  p.value = std::move(init);
  params_.emplace(name, std::move(p));
}

ParameterStore::Param& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const ParameterStore::Param& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

void ParameterStore::zero_grads() {
  for (auto& [name, p] : params_) {
    p.grad.setZero();
    p.has_grad = false;
  }
}

void ParameterStore::clip_grads(double max_norm) {
  double sq = 0.0;
  for (const auto& [name, p] : params_) sq += p.grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto& [name, p] : params_) p.grad *= scale;
}

void ParameterStore::adam_step(double lr, double beta1, double beta2, double eps,
                               double weight_decay) {
  for (const auto& [name, p] : params_)
    if (!p.has_grad) throw ConfigError("adam_step: missing gradient for parameter " + name);
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [name, p] : params_) {
    Eigen::MatrixXd g = p.grad + weight_decay * p.value;
    p.m = beta1 * p.m + (1.0 - beta1) * g;
    p.v = beta2 * p.v + (1.0 - beta2) * g.cwiseProduct(g);
    const Eigen::MatrixXd mhat = p.m / bc1;
    const Eigen::MatrixXd vhat = p.v / bc2;
    p.value -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    p.grad.setZero();
    p.has_grad = false;
  }
}

namespace init {

Eigen::MatrixXd xavier_uniform(int rows, int cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      // 53-bit uniform in [0,1)
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      out(i, j) = (2.0 * u - 1.0) * bound;
    }
  return out;
}

Eigen::VectorXd time_frequencies(int d) {
  Eigen::VectorXd omega(d);
  for (int k = 0; k < d; ++k)
    omega[k] = d > 1 ? std::pow(10.0, -4.0 * k / (d - 1)) : 1.0;
  return omega;
}

}  // namespace init

ParamVars::ParamVars(ad::Tape& tape, const ParameterStore& store) {
  for (const auto& [name, p] : store.all()) vars_.emplace(name, tape.leaf(p.value));
}

ad::Var ParamVars::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ConfigError("unbound parameter: " + name);
  return it->second;
}

void ParamVars::extract_grads(const ad::Tape& tape, ParameterStore& store) const {
  for (const auto& [name, var] : vars_) {
    auto& p = store.at(name);
    p.grad += tape.grad(var);
    p.has_grad = true;
  }
}

namespace layers {

ad::Var time_encode(ad::Tape& t, ad::Var omega, ad::Var phi, double dt) {
  return t.cos(t.add(t.affine(omega, dt, 0.0), phi));
}

ad::Var linear(ad::Tape& t, ad::Var W, ad::Var b, ad::Var x) {
  return t.add(t.matvec(W, x), b);
}

ad::Var gru_cell(ad::Tape& t, const GruVars& p, ad::Var m, ad::Var s_prev) {
  ad::Var z = t.sigmoid(t.add(t.add(t.matvec(p.Wz, m), t.matvec(p.Uz, s_prev)), p.bz));
  ad::Var r = t.sigmoid(t.add(t.add(t.matvec(p.Wr, m), t.matvec(p.Ur, s_prev)), p.br));
  ad::Var h = t.tanh(
      t.add(t.add(t.matvec(p.Wh, m), t.matvec(p.Uh, t.hadamard(r, s_prev))), p.bh));
  ad::Var one_minus_z = t.affine(z, -1.0, 1.0);
  return t.add(t.hadamard(one_minus_z, h), t.hadamard(z, s_prev));
}

ad::Var multi_head_attention(ad::Tape& t, const MhaVars& p, ad::Var q,
                             const std::vector<ad::Var>& keys,
                             const std::vector<ad::Var>& values, int n_heads) {
  const int N = static_cast<int>(keys.size());
  if (N == 0) throw ShapeError("multi_head_attention: empty neighborhood");
  if (keys.size() != values.size()) throw ShapeError("multi_head_attention: |K| != |V|");
  const int d_proj = static_cast<int>(t.val(p.Wq).rows());
  if (d_proj % n_heads != 0)
    throw ShapeError("multi_head_attention: projected dim not divisible by heads");
  const int dh = d_proj / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ad::Var qp = t.matvec(p.Wq, q);
  std::vector<ad::Var> kp(N), vp(N);
  for (int n = 0; n < N; ++n) {
    kp[n] = t.matvec(p.Wk, keys[n]);
    vp[n] = t.matvec(p.Wv, values[n]);
  }

  std::vector<ad::Var> head_outs;
  head_outs.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    ad::Var qh = t.segment(qp, h * dh, dh);
    std::vector<ad::Var> scores(N);
    for (int n = 0; n < N; ++n)
      scores[n] = t.affine(t.dot(qh, t.segment(kp[n], h * dh, dh)), scale, 0.0);
    ad::Var w = t.softmax(t.concat(scores));
    ad::Var acc = t.scale_by(t.element(w, 0), t.segment(vp[0], h * dh, dh));
    for (int n = 1; n < N; ++n)
      acc = t.add(acc, t.scale_by(t.element(w, n), t.segment(vp[n], h * dh, dh)));
    head_outs.push_back(acc);
  }
  return t.matvec(p.Wo, t.concat(head_outs));
}

ad::Var mlp2(ad::Tape& t, ad::Var W1, ad::Var b1, ad::Var W2, ad::Var b2, ad::Var x) {
  return linear(t, W2, b2, t.relu(linear(t, W1, b1, x)));
}

ad::Var bce_pair_loss(ad::Tape& t, ad::Var p_pos, ad::Var p_neg) {
  constexpr double kLo = 1e-12, kHi = 1.0 - 1e-12;
  ad::Var lp = t.log_clamped(p_pos, kLo, kHi);
  ad::Var ln = t.log_clamped(t.affine(p_neg, -1.0, 1.0), kLo, kHi);
  return t.affine(t.add(lp, ln), -1.0, 0.0);
}

}  // namespace layers

double grad_check(const std::function<double(ParameterStore&, bool)>& f,
                  ParameterStore& store, double h) {
  store.zero_grads();
  f(store, true);
  std::map<std::string, Eigen::MatrixXd> analytic;
  for (const auto& [name, p] : store.all()) analytic.emplace(name, p.grad);
  store.zero_grads();

  double max_rel = 0.0;
  for (auto& [name, p] : store.all()) {
    for (int i = 0; i < p.value.rows(); ++i)
      for (int j = 0; j < p.value.cols(); ++j) {
        const double orig = p.value(i, j);
        p.value(i, j) = orig + h;
        const double fp = f(store, false);
        p.value(i, j) = orig - h;
        const double fm = f(store, false);
        p.value(i, j) = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic.at(name)(i, j);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
      }
  }
  return max_rel;
}

}  // namespace pairgraph
