#include "chyvae/autodiff.hpp"

#include <cmath>

namespace chyvae::ad {

namespace {

int shape_count(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionMismatch("Tensor: shape entries must be positive");
    n *= d;
  }
  return n;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  // log(1 + e^x) without overflow on either tail
  return std::log1p(std::exp(-std::abs(x))) + (x > 0.0 ? x : 0.0);
}

}  // namespace

Tensor::Tensor(std::vector<int> shape_, std::vector<double> values)
    : shape(std::move(shape_)), v(std::move(values)) {
  if (shape.size() > 2) throw DimensionMismatch("Tensor: rank must be <= 2");
  if (shape_count(shape) != static_cast<int>(v.size())) {
    throw DimensionMismatch("Tensor: value count does not match shape");
  }
}

Tensor Tensor::vector(std::vector<double> x) {
  int n = static_cast<int>(x.size());
  return Tensor({n}, std::move(x));
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> x) {
  return Tensor({rows, cols}, std::move(x));
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
  Tensor t;
  t.shape = shape;
  t.v.assign(shape_count(shape), 0.0);
  return t;
}

double Tensor::item() const {
  if (v.size() != 1) throw NotScalar("Tensor::item on a non-scalar tensor");
  return v[0];
}

const Tensor& Var::value() const { return tape->value(*this); }
const Tensor& Var::grad() const { return tape->grad(*this); }

Var Tape::push(Node node) {
  node.grad = Tensor::zeros(node.value.shape);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.op = Op::kLeaf;
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw DimensionMismatch("add: shape mismatch");
  Node n;
  n.value = ta;
  for (int i = 0; i < n.value.size(); ++i) n.value.v[i] += tb.v[i];
  n.op = Op::kAdd;
  n.p0 = a.id;
  n.p1 = b.id;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw DimensionMismatch("sub: shape mismatch");
  Node n;
  n.value = ta;
  for (int i = 0; i < n.value.size(); ++i) n.value.v[i] -= tb.v[i];
  n.op = Op::kSub;
  n.p0 = a.id;
  n.p1 = b.id;
  return push(std::move(n));
}

Var Tape::scalar_mul(Var a, double c) {
  Node n;
  n.value = value(a);
  for (auto& x : n.value.v) x *= c;
  n.op = Op::kScalarMul;
  n.p0 = a.id;
  n.c = c;
  return push(std::move(n));
}

Var Tape::scalar_add(Var a, double c) {
  Node n;
  n.value = value(a);
  for (auto& x : n.value.v) x += c;
  n.op = Op::kScalarAdd;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::elementwise_mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw DimensionMismatch("elementwise_mul: shape mismatch");
  Node n;
  n.value = ta;
  for (int i = 0; i < n.value.size(); ++i) n.value.v[i] *= tb.v[i];
  n.op = Op::kMul;
  n.p0 = a.id;
  n.p1 = b.id;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[1] != tb.shape[0]) {
    throw DimensionMismatch("matmul: incompatible shapes");
  }
  const int m = ta.shape[0], k = ta.shape[1], c = tb.shape[1];
  Node n;
  n.value = Tensor::zeros({m, c});
  const double* __restrict__ A = ta.v.data();
  const double* __restrict__ B = tb.v.data();
  double* __restrict__ C = n.value.v.data();
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double aik = A[i * k + kk];
      const double* __restrict__ brow = B + kk * c;
      double* __restrict__ crow = C + i * c;
      for (int j = 0; j < c; ++j) crow[j] += aik * brow[j];
    }
  }
  n.op = Op::kMatmul;
  n.p0 = a.id;
  n.p1 = b.id;
  return push(std::move(n));
}

Var Tape::matvec(Var m, Var x) {
  const Tensor& tm = value(m);
  const Tensor& tx = value(x);
  if (tm.shape.size() != 2 || tx.shape.size() != 1 || tm.shape[1] != tx.shape[0]) {
    throw DimensionMismatch("matvec: incompatible shapes");
  }
  const int r = tm.shape[0], c = tm.shape[1];
  Node n;
  n.value = Tensor::zeros({r});
  for (int i = 0; i < r; ++i) {
    double acc = 0.0;
    for (int j = 0; j < c; ++j) acc += tm.v[i * c + j] * tx.v[j];
    n.value.v[i] = acc;
  }
  n.op = Op::kMatvec;
  n.p0 = m.id;
  n.p1 = x.id;
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.shape.size() != 1 || !ta.same_shape(tb)) throw DimensionMismatch("dot: shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < ta.size(); ++i) acc += ta.v[i] * tb.v[i];
  Node n;
  n.value = Tensor::scalar(acc);
  n.op = Op::kDot;
  n.p0 = a.id;
  n.p1 = b.id;
  return push(std::move(n));
}

Var Tape::outer(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.shape.size() != 1 || tb.shape.size() != 1) throw DimensionMismatch("outer: vectors required");
  const int m = ta.size(), c = tb.size();
  Node n;
  n.value = Tensor::zeros({m, c});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < c; ++j) n.value.v[i * c + j] = ta.v[i] * tb.v[j];
  n.op = Op::kOuter;
  n.p0 = a.id;
  n.p1 = b.id;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  const Tensor& ta = value(a);
  double acc = 0.0;
  for (double x : ta.v) acc += x;
  Node n;
  n.value = Tensor::scalar(acc);
  n.op = Op::kSum;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::log(Var a) {
  Node n;
  n.value = value(a);
  for (auto& x : n.value.v) x = std::log(x);
  n.op = Op::kLog;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n;
  n.value = value(a);
  for (auto& x : n.value.v) x = std::exp(x);
  n.op = Op::kExp;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.value = value(a);
  for (auto& x : n.value.v) x = stable_sigmoid(x);
  n.op = Op::kSigmoid;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.value = value(a);
  for (auto& x : n.value.v) x = x > 0.0 ? x : 0.0;
  n.op = Op::kRelu;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::softplus(Var a) {
  Node n;
  n.value = value(a);
  for (auto& x : n.value.v) x = stable_softplus(x);
  n.op = Op::kSoftplus;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::slice(Var a, int start, int len) {
  const Tensor& ta = value(a);
  if (start < 0 || len < 1 || start + len > ta.size()) throw DimensionMismatch("slice: out of range");
  Node n;
  n.value = Tensor::zeros({len});
  for (int i = 0; i < len; ++i) n.value.v[i] = ta.v[start + i];
  n.op = Op::kSlice;
  n.p0 = a.id;
  n.aux0 = start;
  n.aux1 = len;
  return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  Node n;
  n.value = Tensor::zeros({ta.size() + tb.size()});
  for (int i = 0; i < ta.size(); ++i) n.value.v[i] = ta.v[i];
  for (int i = 0; i < tb.size(); ++i) n.value.v[ta.size() + i] = tb.v[i];
  n.op = Op::kConcat;
  n.p0 = a.id;
  n.p1 = b.id;
  n.aux0 = ta.size();
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  const Tensor& ta = value(a);
  if (ta.shape.size() != 2) throw DimensionMismatch("transpose: matrix required");
  const int r = ta.shape[0], c = ta.shape[1];
  Node n;
  n.value = Tensor::zeros({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) n.value.v[j * r + i] = ta.v[i * c + j];
  n.op = Op::kTranspose;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::diag_part(Var a) {
  const Tensor& ta = value(a);
  if (ta.shape.size() != 2 || ta.shape[0] != ta.shape[1]) {
    throw DimensionMismatch("diag_part: square matrix required");
  }
  const int p = ta.shape[0];
  Node n;
  n.value = Tensor::zeros({p});
  for (int i = 0; i < p; ++i) n.value.v[i] = ta.v[i * p + i];
  n.op = Op::kDiagPart;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::reshape(Var a, std::vector<int> shape) {
  const Tensor& ta = value(a);
  if (shape_count(shape) != ta.size()) throw DimensionMismatch("reshape: element count mismatch");
  Node n;
  n.value = Tensor(std::move(shape), ta.v);
  n.op = Op::kReshape;
  n.p0 = a.id;
  return push(std::move(n));
}

Var Tape::lower_triangular_assemble(Var head, int p) {
  const Tensor& th = value(head);
  if (th.shape.size() != 1 || th.size() != p * p) {
    throw DimensionMismatch("lower_triangular_assemble: head must have p*p entries");
  }
  Node n;
  n.value = Tensor::zeros({p, p});
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) n.value.v[i * p + j] = th.v[i * p + j];
    n.value.v[i * p + i] = stable_softplus(th.v[i * p + i]);
  }
  n.op = Op::kLowerTriAssemble;
  n.p0 = head.id;
  n.aux0 = p;
  return push(std::move(n));
}

void Tape::backprop_node(int id) {
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd: {
      Tensor& g0 = nodes_[n.p0].grad;
      Tensor& g1 = nodes_[n.p1].grad;
      for (int i = 0; i < g.size(); ++i) {
        g0.v[i] += g.v[i];
        g1.v[i] += g.v[i];
      }
      break;
    }
    case Op::kSub: {
      Tensor& g0 = nodes_[n.p0].grad;
      Tensor& g1 = nodes_[n.p1].grad;
      for (int i = 0; i < g.size(); ++i) {
        g0.v[i] += g.v[i];
        g1.v[i] -= g.v[i];
      }
      break;
    }
    case Op::kScalarMul: {
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < g.size(); ++i) g0.v[i] += n.c * g.v[i];
      break;
    }
    case Op::kScalarAdd: {
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < g.size(); ++i) g0.v[i] += g.v[i];
      break;
    }
    case Op::kMul: {
      Tensor& g0 = nodes_[n.p0].grad;
      Tensor& g1 = nodes_[n.p1].grad;
      const Tensor& v0 = nodes_[n.p0].value;
      const Tensor& v1 = nodes_[n.p1].value;
      for (int i = 0; i < g.size(); ++i) {
        g0.v[i] += g.v[i] * v1.v[i];
        g1.v[i] += g.v[i] * v0.v[i];
      }
      break;
    }
    case Op::kMatmul: {
      const Tensor& va = nodes_[n.p0].value;
      const Tensor& vb = nodes_[n.p1].value;
      Tensor& ga = nodes_[n.p0].grad;
      Tensor& gb = nodes_[n.p1].grad;
      const int m = va.shape[0], k = va.shape[1], c = vb.shape[1];
      // dA = G B^T, via a scratch transpose so the inner loop is a
      // contiguous axpy instead of a reduction
      if (scratch_.size() < static_cast<std::size_t>(k) * c) {
        scratch_.resize(static_cast<std::size_t>(k) * c);
      }
      for (int kk = 0; kk < k; ++kk) {
        const double* brow = vb.v.data() + static_cast<std::size_t>(kk) * c;
        for (int j = 0; j < c; ++j) scratch_[static_cast<std::size_t>(j) * k + kk] = brow[j];
      }
      for (int i = 0; i < m; ++i) {
        const double* __restrict__ grow = g.v.data() + static_cast<std::size_t>(i) * c;
        double* __restrict__ garow = ga.v.data() + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < c; ++j) {
          const double gij = grow[j];
          const double* __restrict__ btrow = scratch_.data() + static_cast<std::size_t>(j) * k;
          for (int kk = 0; kk < k; ++kk) garow[kk] += gij * btrow[kk];
        }
      }
      // dB[kk,j] += sum_i A[i,kk] G[i,j]
      for (int i = 0; i < m; ++i) {
        const double* __restrict__ arow = va.v.data() + static_cast<std::size_t>(i) * k;
        const double* __restrict__ grow = g.v.data() + static_cast<std::size_t>(i) * c;
        for (int kk = 0; kk < k; ++kk) {
          const double aik = arow[kk];
          double* __restrict__ gbrow = gb.v.data() + static_cast<std::size_t>(kk) * c;
          for (int j = 0; j < c; ++j) gbrow[j] += aik * grow[j];
        }
      }
      break;
    }
    case Op::kMatvec: {
      const Tensor& vm = nodes_[n.p0].value;
      const Tensor& vx = nodes_[n.p1].value;
      Tensor& gm = nodes_[n.p0].grad;
      Tensor& gx = nodes_[n.p1].grad;
      const int r = vm.shape[0], c = vm.shape[1];
      for (int i = 0; i < r; ++i) {
        const double gi = g.v[i];
        for (int j = 0; j < c; ++j) {
          gm.v[i * c + j] += gi * vx.v[j];
          gx.v[j] += gi * vm.v[i * c + j];
        }
      }
      break;
    }
    case Op::kDot: {
      const Tensor& va = nodes_[n.p0].value;
      const Tensor& vb = nodes_[n.p1].value;
      Tensor& ga = nodes_[n.p0].grad;
      Tensor& gb = nodes_[n.p1].grad;
      const double gs = g.v[0];
      for (int i = 0; i < va.size(); ++i) {
        ga.v[i] += gs * vb.v[i];
        gb.v[i] += gs * va.v[i];
      }
      break;
    }
    case Op::kOuter: {
      const Tensor& va = nodes_[n.p0].value;
      const Tensor& vb = nodes_[n.p1].value;
      Tensor& ga = nodes_[n.p0].grad;
      Tensor& gb = nodes_[n.p1].grad;
      const int m = va.size(), c = vb.size();
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < c; ++j) {
          acc += g.v[i * c + j] * vb.v[j];
          gb.v[j] += g.v[i * c + j] * va.v[i];
        }
        ga.v[i] += acc;
      }
      break;
    }
    case Op::kSum: {
      Tensor& g0 = nodes_[n.p0].grad;
      const double gs = g.v[0];
      for (auto& x : g0.v) x += gs;
      break;
    }
    case Op::kLog: {
      const Tensor& v0 = nodes_[n.p0].value;
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < g.size(); ++i) g0.v[i] += g.v[i] / v0.v[i];
      break;
    }
    case Op::kExp: {
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < g.size(); ++i) g0.v[i] += g.v[i] * n.value.v[i];
      break;
    }
    case Op::kSigmoid: {
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < g.size(); ++i) {
        double y = n.value.v[i];
        g0.v[i] += g.v[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::kRelu: {
      const Tensor& v0 = nodes_[n.p0].value;
      Tensor& g0 = nodes_[n.p0].grad;
      // subgradient 0 at exactly 0
      for (int i = 0; i < g.size(); ++i) g0.v[i] += v0.v[i] > 0.0 ? g.v[i] : 0.0;
      break;
    }
    case Op::kSoftplus: {
      const Tensor& v0 = nodes_[n.p0].value;
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < g.size(); ++i) g0.v[i] += g.v[i] * stable_sigmoid(v0.v[i]);
      break;
    }
    case Op::kSlice: {
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < n.aux1; ++i) g0.v[n.aux0 + i] += g.v[i];
      break;
    }
    case Op::kConcat: {
      Tensor& g0 = nodes_[n.p0].grad;
      Tensor& g1 = nodes_[n.p1].grad;
      for (int i = 0; i < n.aux0; ++i) g0.v[i] += g.v[i];
      for (int i = 0; i < g1.size(); ++i) g1.v[i] += g.v[n.aux0 + i];
      break;
    }
    case Op::kTranspose: {
      Tensor& g0 = nodes_[n.p0].grad;
      const int c = n.value.shape[0], r = n.value.shape[1];  // output is [c,r] of input [r,c]
      for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) g0.v[i * c + j] += g.v[j * r + i];
      break;
    }
    case Op::kDiagPart: {
      Tensor& g0 = nodes_[n.p0].grad;
      const int p = n.value.size();
      for (int i = 0; i < p; ++i) g0.v[i * p + i] += g.v[i];
      break;
    }
    case Op::kReshape: {
      Tensor& g0 = nodes_[n.p0].grad;
      for (int i = 0; i < g.size(); ++i) g0.v[i] += g.v[i];
      break;
    }
    case Op::kLowerTriAssemble: {
      const Tensor& v0 = nodes_[n.p0].value;
      Tensor& g0 = nodes_[n.p0].grad;
      const int p = n.aux0;
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < i; ++j) g0.v[i * p + j] += g.v[i * p + j];
        g0.v[i * p + i] += g.v[i * p + i] * stable_sigmoid(v0.v[i * p + i]);
      }
      break;
    }
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this || loss.id < 0) throw DomainError("backward: loss is not on this tape");
  if (!nodes_[loss.id].value.is_scalar()) throw NotScalar("backward: loss must be scalar");
  nodes_[loss.id].grad.v[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) backprop_node(id);
}

void Tape::zero_grad() {
  for (auto& n : nodes_) {
    for (auto& g : n.grad.v) g = 0.0;
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace chyvae::ad
