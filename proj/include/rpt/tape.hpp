#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rpt/types.hpp"

namespace rpt::num {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  double scalar() const;  // value of a 1x1 node
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode automatic differentiation over dense rank-<=2 values.
//
// The primitive set is: add, subtract, multiply (elementwise), matmul,
// tanh, exp, log, square, sum, mean, clamp-at-maximum, binary min, and
// scaling by a constant. Nodes are appended in evaluation order, so parents
// always precede children and the backward pass is a single reverse sweep
// that visits each node exactly once. clamp/min use the one-sided
// subgradient that is zero beyond the active bound.
//
// A tape is single-threaded during construction and backward; distinct
// tapes may run concurrently.
class Tape {
 public:
  Var leaf(Matrix value);
  Var constant(Matrix value);
  Var constant(double value);  // 1x1

  // d(output)/d(leaf) for a scalar output node. Leaves the output does not
  // depend on receive zero gradients of the leaf's shape.
  std::vector<Matrix> gradients(const Var& output, std::span<const Var> leaves);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kConstant,
    kAdd,
    kSub,
    kMul,
    kScale,
    kMatMul,
    kTanh,
    kExp,
    kLog,
    kSquare,
    kSum,
    kMean,
    kClampMax,
    kMin,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double aux = 0.0;  // scale factor or clamp bound
    Matrix value;
    bool needs_grad = false;
  };

  Var emit(Op op, int a, int b, Matrix value, double aux);
  const Node& node(int id) const { return nodes_[id]; }

  std::vector<Node> nodes_;

  friend Var operator+(const Var&, const Var&);
  friend Var operator-(const Var&, const Var&);
  friend Var operator*(const Var&, const Var&);
  friend Var matmul(const Var&, const Var&);
  friend Var scale(const Var&, double);
  friend Var tanh(const Var&);
  friend Var exp(const Var&);
  friend Var log(const Var&);
  friend Var square(const Var&);
  friend Var sum(const Var&);
  friend Var mean(const Var&);
  friend Var clamp_max(const Var&, double);
  friend Var min(const Var&, const Var&);
  friend class Var;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);  // elementwise
Var matmul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var tanh(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var sum(const Var& a);   // 1x1
Var mean(const Var& a);  // 1x1
Var clamp_max(const Var& a, double bound);
Var min(const Var& a, const Var& b);  // elementwise; ties follow the first arg

inline Var operator*(double c, const Var& a) { return scale(a, c); }
inline Var operator-(const Var& a) { return scale(a, -1.0); }
// max-at-minimum, composed from the primitive set
inline Var clamp_min(const Var& a, double bound) {
  return scale(clamp_max(scale(a, -1.0), -bound), -1.0);
}

}  // namespace rpt::num
