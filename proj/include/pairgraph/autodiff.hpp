#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace pairgraph::ad {

// Handle into a Tape node.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over dense 64-bit values. Vectors are n x 1 matrices and
// scalars are 1 x 1. All reductions use Eigen's ordered loops, so repeated
// passes over identical inputs bit-match.
class Tape {
 public:
  Var leaf(Eigen::MatrixXd value);
  Var scalar(double value) { return leaf(Eigen::MatrixXd::Constant(1, 1, value)); }

  const Eigen::MatrixXd& val(Var v) const { return nodes_[v.idx].val; }
  const Eigen::MatrixXd& grad(Var v) const { return nodes_[v.idx].grad; }

  Var matvec(Var W, Var x);        // W (m x n) * x (n x 1)
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var affine(Var a, double scale, double shift);  // scale * a + shift, cwise
  Var concat(std::span<const Var> parts);
  Var segment(Var a, int start, int len);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var cos(Var a);
  Var dot(Var a, Var b);           // 1 x 1
  Var softmax(Var a);              // over a vector
  Var scale_by(Var s, Var v);      // scalar s times vector v
  Var element(Var v, int i);       // 1 x 1 pick
  Var sum(std::span<const Var> scalars);
  Var log_clamped(Var s, double lo, double hi);  // log(clamp(s)); zero grad outside

  // Seeds the root gradient with 1 and sweeps the tape in reverse.
  void backward(Var scalar_root);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Eigen::MatrixXd val;
    Eigen::MatrixXd grad;
    std::function<void(Tape&, const Node&)> back;  // empty for leaves
  };

  Node& node(Var v) { return nodes_[v.idx]; }
  Var push(Eigen::MatrixXd value, std::function<void(Tape&, const Node&)> back);

  std::vector<Node> nodes_;
};

}  // namespace pairgraph::ad
