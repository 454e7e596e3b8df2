#include "rpt/tape.hpp"

#include <stdexcept>
#include <string>

namespace rpt::num {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("tape: ") + what);
}

}  // namespace

const Matrix& Var::value() const {
  require(tape_ != nullptr && id_ >= 0, "empty Var handle");
  return tape_->node(id_).value;
}

double Var::scalar() const {
  const Matrix& v = value();
  require(v.rows() == 1 && v.cols() == 1, "scalar() on non-1x1 node");
  return v(0, 0);
}

Var Tape::emit(Op op, int a, int b, Matrix value, double aux) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.aux = aux;
  n.value = std::move(value);
  n.needs_grad = (op == Op::kLeaf) ||
                 (a >= 0 && nodes_[a].needs_grad) ||
                 (b >= 0 && nodes_[b].needs_grad);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Matrix value) { return emit(Op::kLeaf, -1, -1, std::move(value), 0); }
Var Tape::constant(Matrix value) { return emit(Op::kConstant, -1, -1, std::move(value), 0); }
Var Tape::constant(double value) {
  return constant(Matrix(Matrix::Constant(1, 1, value)));
}

namespace {

Tape* own(const Var& a) {
  require(a.tape() != nullptr, "empty Var handle");
  return a.tape();
}

Tape* same_tape(const Var& a, const Var& b) {
  require(a.tape() != nullptr && a.tape() == b.tape(),
          "operands from different tapes");
  return a.tape();
}

void same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string("tape: shape mismatch in ") + op);
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  Tape* t = same_tape(a, b);
  same_shape(a, b, "add");
  return t->emit(Tape::Op::kAdd, a.id(), b.id(), a.value() + b.value(), 0);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = same_tape(a, b);
  same_shape(a, b, "subtract");
  return t->emit(Tape::Op::kSub, a.id(), b.id(), a.value() - b.value(), 0);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = same_tape(a, b);
  same_shape(a, b, "multiply");
  return t->emit(Tape::Op::kMul, a.id(), b.id(),
                 (a.value().array() * b.value().array()).matrix(), 0);
}

Var matmul(const Var& a, const Var& b) {
  Tape* t = same_tape(a, b);
  require(a.cols() == b.rows(), "inner dimension mismatch in matmul");
  return t->emit(Tape::Op::kMatMul, a.id(), b.id(), a.value() * b.value(), 0);
}

Var scale(const Var& a, double c) {
  return own(a)->emit(Tape::Op::kScale, a.id(), -1, c * a.value(), c);
}

Var tanh(const Var& a) {
  return own(a)->emit(Tape::Op::kTanh, a.id(), -1,
                        a.value().array().tanh().matrix(), 0);
}

Var exp(const Var& a) {
  return own(a)->emit(Tape::Op::kExp, a.id(), -1,
                        a.value().array().exp().matrix(), 0);
}

Var log(const Var& a) {
  if ((a.value().array() <= 0.0).any())
    throw std::domain_error("tape: log of non-positive value");
  return own(a)->emit(Tape::Op::kLog, a.id(), -1,
                        a.value().array().log().matrix(), 0);
}

Var square(const Var& a) {
  return own(a)->emit(Tape::Op::kSquare, a.id(), -1,
                        a.value().array().square().matrix(), 0);
}

Var sum(const Var& a) {
  return own(a)->emit(Tape::Op::kSum, a.id(), -1,
                        Matrix::Constant(1, 1, a.value().sum()), 0);
}

Var mean(const Var& a) {
  require(a.value().size() > 0, "mean of empty value");
  return own(a)->emit(Tape::Op::kMean, a.id(), -1,
                        Matrix::Constant(1, 1, a.value().mean()), 0);
}

Var clamp_max(const Var& a, double bound) {
  return own(a)->emit(Tape::Op::kClampMax, a.id(), -1,
                        a.value().array().min(bound).matrix(), bound);
}

Var min(const Var& a, const Var& b) {
  Tape* t = same_tape(a, b);
  same_shape(a, b, "min");
  return t->emit(Tape::Op::kMin, a.id(), b.id(),
                 a.value().array().min(b.value().array()).matrix(), 0);
}

std::vector<Matrix> Tape::gradients(const Var& output,
                                    std::span<const Var> leaves) {
  require(output.tape() == this, "output from a different tape");
  const Node& out = nodes_[output.id()];
  if (out.value.rows() != 1 || out.value.cols() != 1)
    throw std::invalid_argument("tape: gradients require a scalar output");

  std::vector<Matrix> grad(nodes_.size());
  auto accumulate = [&](int id, const Matrix& delta) {
    if (!nodes_[id].needs_grad) return;
    if (grad[id].size() == 0)
      grad[id] = Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    grad[id] += delta;
  };

  grad[output.id()] = Matrix::Constant(1, 1, 1.0);

  for (int i = output.id(); i >= 0; --i) {
    const Node& n = nodes_[i];
    if (!n.needs_grad || grad[i].size() == 0) continue;
    const Matrix& g = grad[i];
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConstant:
        break;
      case Op::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::kSub:
        accumulate(n.a, g);
        accumulate(n.b, -g);
        break;
      case Op::kMul:
        accumulate(n.a, (g.array() * nodes_[n.b].value.array()).matrix());
        accumulate(n.b, (g.array() * nodes_[n.a].value.array()).matrix());
        break;
      case Op::kScale:
        accumulate(n.a, n.aux * g);
        break;
      case Op::kMatMul:
        accumulate(n.a, g * nodes_[n.b].value.transpose());
        accumulate(n.b, nodes_[n.a].value.transpose() * g);
        break;
      case Op::kTanh:
        accumulate(n.a, (g.array() * (1.0 - n.value.array().square())).matrix());
        break;
      case Op::kExp:
        accumulate(n.a, (g.array() * n.value.array()).matrix());
        break;
      case Op::kLog:
        accumulate(n.a, (g.array() / nodes_[n.a].value.array()).matrix());
        break;
      case Op::kSquare:
        accumulate(n.a, (2.0 * g.array() * nodes_[n.a].value.array()).matrix());
        break;
      case Op::kSum:
        accumulate(n.a, Matrix::Constant(nodes_[n.a].value.rows(),
                                         nodes_[n.a].value.cols(), g(0, 0)));
        break;
      case Op::kMean:
        accumulate(n.a, Matrix::Constant(
                            nodes_[n.a].value.rows(), nodes_[n.a].value.cols(),
                            g(0, 0) / static_cast<double>(nodes_[n.a].value.size())));
        break;
      case Op::kClampMax: {
        const auto pass = (nodes_[n.a].value.array() <= n.aux).cast<double>();
        accumulate(n.a, (g.array() * pass).matrix());
        break;
      }
      case Op::kMin: {
        const auto take_a =
            (nodes_[n.a].value.array() <= nodes_[n.b].value.array()).cast<double>();
        accumulate(n.a, (g.array() * take_a).matrix());
        accumulate(n.b, (g.array() * (1.0 - take_a)).matrix());
        break;
      }
    }
    if (i != output.id() && n.op != Op::kLeaf) grad[i].resize(0, 0);
  }

  std::vector<Matrix> out_grads;
  out_grads.reserve(leaves.size());
  for (const Var& l : leaves) {
    require(l.tape() == this, "leaf from a different tape");
    require(nodes_[l.id()].op == Op::kLeaf, "gradient requested for non-leaf");
    if (grad[l.id()].size() == 0)
      out_grads.push_back(Matrix::Zero(nodes_[l.id()].value.rows(),
                                       nodes_[l.id()].value.cols()));
    else
      out_grads.push_back(std::move(grad[l.id()]));
  }
  return out_grads;
}

}  // namespace rpt::num
