#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chyvae/errors.hpp"

namespace chyvae::ad {

// Dense real tensor of rank 0..2. No broadcasting anywhere; every operation
// checks shapes explicitly.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::vector<int> shape_, std::vector<double> values);

  static Tensor scalar(double x) { return Tensor({}, {x}); }
  static Tensor vector(std::vector<double> x);
  static Tensor matrix(int rows, int cols, std::vector<double> x);
  static Tensor zeros(const std::vector<int>& shape);

  int size() const { return static_cast<int>(v.size()); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool is_scalar() const { return v.size() == 1; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  double item() const;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Tensor& grad() const;
};

// Reverse-mode tape. Nodes are recorded in topological order by construction;
// backward() walks them in exact reverse order, accumulating adjoints.
// Single-owner during forward and backward; distinct tapes are independent.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scalar_mul(Var a, double c);
  Var scalar_add(Var a, double c);
  Var elementwise_mul(Var a, Var b);
  Var matmul(Var a, Var b);   // [m,k] x [k,n] -> [m,n]
  Var matvec(Var m, Var x);   // [r,c] x [c] -> [r]
  Var dot(Var a, Var b);      // [n] . [n] -> scalar
  Var outer(Var a, Var b);    // [m] x [n] -> [m,n]
  Var sum(Var a);             // all elements -> scalar
  Var log(Var a);
  Var exp(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var softplus(Var a);
  Var slice(Var a, int start, int len);  // flat view -> [len]
  Var concat(Var a, Var b);              // flat -> [na + nb]
  Var transpose(Var a);
  Var diag_part(Var a);                  // [p,p] -> [p]
  Var reshape(Var a, std::vector<int> shape);

  // Length p*p vector -> [p,p]: strict upper zeroed, softplus on the
  // diagonal, strict lower passed through. Gradients flow only through the
  // retained entries.
  Var lower_triangular_assemble(Var head, int p);

  // Accumulate adjoints of `loss` (must be scalar) into every node reachable
  // backwards from it. Leaves with requires_grad keep their gradients until
  // zero_grad() or clear().
  void backward(Var loss);

  void zero_grad();
  void clear();
  int size() const { return static_cast<int>(nodes_.size()); }

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kAdd, kSub, kScalarMul, kScalarAdd, kMul, kMatmul, kMatvec, kDot,
    kOuter, kSum, kLog, kExp, kSigmoid, kRelu, kSoftplus, kSlice, kConcat,
    kTranspose, kDiagPart, kReshape, kLowerTriAssemble,
  };

  struct Node {
    Tensor value;
    Tensor grad;
    Op op = Op::kLeaf;
    int p0 = -1, p1 = -1;
    int aux0 = 0, aux1 = 0;
    double c = 0.0;
    bool requires_grad = false;
  };

  Var push(Node node);
  void backprop_node(int id);

  std::vector<Node> nodes_;
  std::vector<double> scratch_;  // matmul backward transpose buffer
};

}  // namespace chyvae::ad
