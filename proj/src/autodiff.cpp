#include "pairgraph/autodiff.hpp"

#include <cmath>

#include "pairgraph/errors.hpp"

namespace pairgraph::ad {

namespace {

std::string shape_str(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_vector(const Eigen::MatrixXd& m, const char* what) {
  if (m.cols() != 1) throw ShapeError(std::string(what) + ": expected column vector, got " + shape_str(m));
}

}  // namespace

Var Tape::push(Eigen::MatrixXd value, std::function<void(Tape&, const Node&)> back) {
  Node n;
  n.grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  n.val = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Eigen::MatrixXd value) { return push(std::move(value), nullptr); }

Var Tape::matvec(Var W, Var x) {
  const auto& w = val(W);
  const auto& v = val(x);
  if (w.cols() != v.rows() || v.cols() != 1)
    throw ShapeError("matvec: " + shape_str(w) + " * " + shape_str(v));
  return push(w * v, [W, x](Tape& t, const Node& self) {
    t.node(W).grad.noalias() += self.grad * t.val(x).transpose();
    t.node(x).grad.noalias() += t.val(W).transpose() * self.grad;
  });
}

Var Tape::add(Var a, Var b) {
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw ShapeError("add: " + shape_str(val(a)) + " vs " + shape_str(val(b)));
  return push(val(a) + val(b), [a, b](Tape& t, const Node& self) {
    t.node(a).grad += self.grad;
    t.node(b).grad += self.grad;
  });
}

Var Tape::sub(Var a, Var b) {
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw ShapeError("sub: " + shape_str(val(a)) + " vs " + shape_str(val(b)));
  return push(val(a) - val(b), [a, b](Tape& t, const Node& self) {
    t.node(a).grad += self.grad;
    t.node(b).grad -= self.grad;
  });
}

Var Tape::hadamard(Var a, Var b) {
  if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
    throw ShapeError("hadamard: " + shape_str(val(a)) + " vs " + shape_str(val(b)));
  return push(val(a).cwiseProduct(val(b)), [a, b](Tape& t, const Node& self) {
    t.node(a).grad += self.grad.cwiseProduct(t.val(b));
    t.node(b).grad += self.grad.cwiseProduct(t.val(a));
  });
}

Var Tape::affine(Var a, double scale, double shift) {
  return push((val(a).array() * scale + shift).matrix(), [a, scale](Tape& t, const Node& self) {
    t.node(a).grad += self.grad * scale;
  });
}

Var Tape::concat(std::span<const Var> parts) {
  long rows = 0;
  for (Var p : parts) {
    require_vector(val(p), "concat");
    rows += val(p).rows();
  }
  Eigen::MatrixXd out(rows, 1);
  long off = 0;
  for (Var p : parts) {
    out.block(off, 0, val(p).rows(), 1) = val(p);
    off += val(p).rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), [ps](Tape& t, const Node& self) {
    long off = 0;
    for (Var p : ps) {
      const long r = t.val(p).rows();
      t.node(p).grad += self.grad.block(off, 0, r, 1);
      off += r;
    }
  });
}

Var Tape::segment(Var a, int start, int len) {
  require_vector(val(a), "segment");
  if (start < 0 || len < 0 || start + len > val(a).rows())
    throw ShapeError("segment out of range");
  return push(val(a).block(start, 0, len, 1), [a, start, len](Tape& t, const Node& self) {
    t.node(a).grad.block(start, 0, len, 1) += self.grad;
  });
}

Var Tape::sigmoid(Var a) {
  Eigen::MatrixXd y = (1.0 / (1.0 + (-val(a).array()).exp())).matrix();
  return push(std::move(y), [a](Tape& t, const Node& self) {
    t.node(a).grad +=
        self.grad.cwiseProduct(self.val.cwiseProduct((1.0 - self.val.array()).matrix()));
  });
}

Var Tape::tanh(Var a) {
  return push(val(a).array().tanh().matrix(), [a](Tape& t, const Node& self) {
    t.node(a).grad += self.grad.cwiseProduct((1.0 - self.val.array().square()).matrix());
  });
}

Var Tape::relu(Var a) {
  return push(val(a).cwiseMax(0.0), [a](Tape& t, const Node& self) {
    t.node(a).grad += self.grad.cwiseProduct(
        (t.val(a).array() > 0.0).cast<double>().matrix());
  });
}

Var Tape::cos(Var a) {
  return push(val(a).array().cos().matrix(), [a](Tape& t, const Node& self) {
    t.node(a).grad -= self.grad.cwiseProduct(t.val(a).array().sin().matrix());
  });
}

Var Tape::dot(Var a, Var b) {
  require_vector(val(a), "dot");
  require_vector(val(b), "dot");
  if (val(a).rows() != val(b).rows())
    throw ShapeError("dot: " + shape_str(val(a)) + " vs " + shape_str(val(b)));
  Eigen::MatrixXd y(1, 1);
  y(0, 0) = val(a).col(0).dot(val(b).col(0));
  return push(std::move(y), [a, b](Tape& t, const Node& self) {
    const double g = self.grad(0, 0);
    t.node(a).grad += g * t.val(b);
    t.node(b).grad += g * t.val(a);
  });
}

Var Tape::softmax(Var a) {
  require_vector(val(a), "softmax");
  const Eigen::ArrayXd x = val(a).col(0).array();
  const Eigen::ArrayXd e = (x - x.maxCoeff()).exp();
  Eigen::MatrixXd y = (e / e.sum()).matrix();
  return push(std::move(y), [a](Tape& t, const Node& self) {
    const Eigen::VectorXd y = self.val.col(0);
    const Eigen::VectorXd g = self.grad.col(0);
    const double gy = g.dot(y);
    t.node(a).grad.col(0) += y.cwiseProduct(g.array().matrix() -
                                            Eigen::VectorXd::Constant(y.size(), gy));
  });
}

Var Tape::scale_by(Var s, Var v) {
  if (val(s).rows() != 1 || val(s).cols() != 1) throw ShapeError("scale_by: scalar expected");
  require_vector(val(v), "scale_by");
  return push(val(s)(0, 0) * val(v), [s, v](Tape& t, const Node& self) {
    t.node(s).grad(0, 0) += self.grad.col(0).dot(t.val(v).col(0));
    t.node(v).grad += t.val(s)(0, 0) * self.grad;
  });
}

Var Tape::element(Var v, int i) {
  require_vector(val(v), "element");
  if (i < 0 || i >= val(v).rows()) throw ShapeError("element index out of range");
  Eigen::MatrixXd y(1, 1);
  y(0, 0) = val(v)(i, 0);
  return push(std::move(y), [v, i](Tape& t, const Node& self) {
    t.node(v).grad(i, 0) += self.grad(0, 0);
  });
}

Var Tape::sum(std::span<const Var> scalars) {
  double acc = 0.0;
  for (Var s : scalars) {
    if (val(s).size() != 1) throw ShapeError("sum: scalar expected");
    acc += val(s)(0, 0);
  }
  std::vector<Var> ss(scalars.begin(), scalars.end());
  return push(Eigen::MatrixXd::Constant(1, 1, acc), [ss](Tape& t, const Node& self) {
    for (Var s : ss) t.node(s).grad(0, 0) += self.grad(0, 0);
  });
}

Var Tape::log_clamped(Var s, double lo, double hi) {
  if (val(s).size() != 1) throw ShapeError("log_clamped: scalar expected");
  const double x = val(s)(0, 0);
  const double c = std::min(std::max(x, lo), hi);
  return push(Eigen::MatrixXd::Constant(1, 1, std::log(c)),
              [s, lo, hi](Tape& t, const Node& self) {
                const double x = t.val(s)(0, 0);
                if (x > lo && x < hi) t.node(s).grad(0, 0) += self.grad(0, 0) / x;
              });
}

void Tape::backward(Var scalar_root) {
  if (val(scalar_root).size() != 1) throw ShapeError("backward: root must be scalar");
  node(scalar_root).grad(0, 0) = 1.0;
  for (int i = scalar_root.idx; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this, nodes_[i]);
}

}  // namespace pairgraph::ad
