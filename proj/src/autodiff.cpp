#include "fedhcdr/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace fedhcdr::ad {

double stable_softplus(double x) {
  // log(1 + e^x) without overflow for large |x|
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double stable_logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: var from another tape");
  if (value(loss).rows() != 1 || value(loss).cols() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[loss.id].grad(0, 0) = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].pull) nodes_[i].pull(*this);
  }
}

namespace {
void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("vars from different tapes");
}
}  // namespace

Var Tape::add(Var a, Var b) {
  check_same_tape(a, b);
  Var out{this, nodes_.size()};
  return push(value(a) + value(b), [a = a.id, b = b.id, o = out.id](Tape& t) {
    t.grad_ref(a) += t.nodes_[o].grad;
    t.grad_ref(b) += t.nodes_[o].grad;
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_tape(a, b);
  Var out{this, nodes_.size()};
  return push(value(a) - value(b), [a = a.id, b = b.id, o = out.id](Tape& t) {
    t.grad_ref(a) += t.nodes_[o].grad;
    t.grad_ref(b) -= t.nodes_[o].grad;
  });
}

Var Tape::neg(Var a) {
  Var out{this, nodes_.size()};
  return push(-value(a), [a = a.id, o = out.id](Tape& t) {
    t.grad_ref(a) -= t.nodes_[o].grad;
  });
}

Var Tape::scale(Var a, double c) {
  Var out{this, nodes_.size()};
  return push(c * value(a), [a = a.id, c, o = out.id](Tape& t) {
    t.grad_ref(a) += c * t.nodes_[o].grad;
  });
}

Var Tape::cmul(Var a, Var b) {
  check_same_tape(a, b);
  Var out{this, nodes_.size()};
  return push(value(a).cwiseProduct(value(b)),
              [a = a.id, b = b.id, o = out.id](Tape& t) {
                t.grad_ref(a) += t.nodes_[o].grad.cwiseProduct(t.nodes_[b].value);
                t.grad_ref(b) += t.nodes_[o].grad.cwiseProduct(t.nodes_[a].value);
              });
}

Var Tape::smul(Var s, Var a) {
  check_same_tape(s, a);
  assert(value(s).size() == 1);
  Var out{this, nodes_.size()};
  return push(value(s)(0, 0) * value(a), [s = s.id, a = a.id, o = out.id](Tape& t) {
    t.grad_ref(s)(0, 0) += t.nodes_[o].grad.cwiseProduct(t.nodes_[a].value).sum();
    t.grad_ref(a) += t.nodes_[s].value(0, 0) * t.nodes_[o].grad;
  });
}

Var Tape::matmul(Var a, Var b) {
  check_same_tape(a, b);
  Var out{this, nodes_.size()};
  return push(value(a) * value(b), [a = a.id, b = b.id, o = out.id](Tape& t) {
    t.grad_ref(a) += t.nodes_[o].grad * t.nodes_[b].value.transpose();
    t.grad_ref(b) += t.nodes_[a].value.transpose() * t.nodes_[o].grad;
  });
}

Var Tape::transpose(Var a) {
  Var out{this, nodes_.size()};
  return push(value(a).transpose(), [a = a.id, o = out.id](Tape& t) {
    t.grad_ref(a) += t.nodes_[o].grad.transpose();
  });
}

Var Tape::spmm(const SpMat* s, Var x) {
  Var out{this, nodes_.size()};
  return push((*s) * value(x), [s, x = x.id, o = out.id](Tape& t) {
    t.grad_ref(x) += s->transpose() * t.nodes_[o].grad;
  });
}

Var Tape::add_rowvec(Var a, Var row) {
  check_same_tape(a, row);
  assert(value(row).rows() == 1 && value(row).cols() == value(a).cols());
  Mat v = value(a);
  v.rowwise() += value(row).row(0);
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, r = row.id, o = out.id](Tape& t) {
    t.grad_ref(a) += t.nodes_[o].grad;
    t.grad_ref(r).row(0) += t.nodes_[o].grad.colwise().sum();
  });
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  Mat v(static_cast<Eigen::Index>(idx.size()), value(a).cols());
  for (std::size_t i = 0; i < idx.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = value(a).row(idx[i]);
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, idx = std::move(idx), o = out.id](Tape& t) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      t.grad_ref(a).row(idx[i]) += t.nodes_[o].grad.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::rowwise_dot(Var a, Var b) {
  check_same_tape(a, b);
  assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
  Mat v = value(a).cwiseProduct(value(b)).rowwise().sum();
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, b = b.id, o = out.id](Tape& t) {
    const Vec g = t.nodes_[o].grad.col(0);
    t.grad_ref(a) += g.asDiagonal() * t.nodes_[b].value;
    t.grad_ref(b) += g.asDiagonal() * t.nodes_[a].value;
  });
}

Var Tape::sum(Var a) {
  Var out{this, nodes_.size()};
  return push(Mat::Constant(1, 1, value(a).sum()), [a = a.id, o = out.id](Tape& t) {
    t.grad_ref(a).array() += t.nodes_[o].grad(0, 0);
  });
}

Var Tape::mean_rows(Var a) {
  const double n = static_cast<double>(value(a).rows());
  Mat v = value(a).colwise().mean();
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, n, o = out.id](Tape& t) {
    t.grad_ref(a) += (Mat::Ones(t.nodes_[a].value.rows(), 1) * t.nodes_[o].grad.row(0)) / n;
  });
}

Var Tape::tanh(Var a) {
  Mat v = value(a).array().tanh().matrix();
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, o = out.id](Tape& t) {
    const Mat& y = t.nodes_[o].value;
    t.grad_ref(a) += t.nodes_[o].grad.cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

Var Tape::logistic(Var a) {
  Mat v = value(a).unaryExpr([](double x) { return stable_logistic(x); });
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, o = out.id](Tape& t) {
    const Mat& y = t.nodes_[o].value;
    t.grad_ref(a) += t.nodes_[o].grad.cwiseProduct((y.array() * (1.0 - y.array())).matrix());
  });
}

Var Tape::softplus(Var a) {
  Mat v = value(a).unaryExpr([](double x) { return stable_softplus(x); });
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, o = out.id](Tape& t) {
    t.grad_ref(a) += t.nodes_[o].grad.cwiseProduct(
        t.nodes_[a].value.unaryExpr([](double x) { return stable_logistic(x); }));
  });
}

Var Tape::log(Var a) {
  Mat v = value(a).array().log().matrix();
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, o = out.id](Tape& t) {
    t.grad_ref(a) += t.nodes_[o].grad.cwiseQuotient(t.nodes_[a].value);
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  Mat v = value(a).array().max(lo).min(hi).matrix();
  Var out{this, nodes_.size()};
  return push(std::move(v), [a = a.id, lo, hi, o = out.id](Tape& t) {
    const Mat& x = t.nodes_[a].value;
    Mat pass = ((x.array() > lo) && (x.array() < hi)).cast<double>().matrix();
    t.grad_ref(a) += t.nodes_[o].grad.cwiseProduct(pass);
  });
}

}  // namespace fedhcdr::ad
