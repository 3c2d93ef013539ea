#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fedhcdr/types.hpp"

namespace fedhcdr::ad {

class Tape;

// Handle into a Tape. Scalars are 1x1 matrices.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

// Reverse-mode tape over dense Eigen matrices. Nodes are created in
// topological order, so one reverse sweep over the node list backpropagates.
// Tapes are cheap and rebuilt per optimization step.
class Tape {
 public:
  Var leaf(const Mat& value) { return push(value); }
  Var constant(const Mat& value) { return push(value); }
  Var scalar(double v) { return push(Mat::Constant(1, 1, v)); }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  // Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse. loss must be 1x1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // -- operations ----------------------------------------------------------

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);
  // elementwise product, same shapes
  Var cmul(Var a, Var b);
  // scalar (1x1) times matrix
  Var smul(Var s, Var a);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  // sparse constant times dense var; `s` must outlive the tape
  Var spmm(const SpMat* s, Var x);
  // broadcast a 1xd row vector over every row
  Var add_rowvec(Var a, Var row);
  Var gather_rows(Var a, std::vector<int> idx);
  // per-row dot product, returns nx1
  Var rowwise_dot(Var a, Var b);
  Var sum(Var a);          // 1x1
  Var mean_rows(Var a);    // 1xd
  Var tanh(Var a);
  Var logistic(Var a);
  Var softplus(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> pull;  // adds this node's grad into parents
  };

  Var push(Mat value, std::function<void(Tape&)> pull = nullptr) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(pull)});
    return Var{this, nodes_.size() - 1};
  }

  Mat& grad_ref(std::size_t id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

// Numerically stable scalar helpers shared with non-tape code paths.
double stable_softplus(double x);
double stable_logistic(double x);

}  // namespace fedhcdr::ad
