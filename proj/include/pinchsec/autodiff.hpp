#pragma once

// Reverse-mode automatic differentiation over dense real tensors. Complex
// quantities are carried as (real, imaginary) pairs of real tensors, so every
// gradient is an ordinary real partial derivative.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pinchsec::ad {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Row-major dense matrix; vectors are columns (n x 1), scalars are 1 x 1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor from(int r, int c, std::vector<double> values);
  static Tensor identity(int n);

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double scalar_value() const;
};

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,
  AddScalar,
  Exp,
  Log2,
  Sqrt,
  Relu,
  Sigmoid,
  Softplus,
  Square,
  Abs,
  Cos,
  Sin,
  MatMul,
  Transpose,
  Sum,
  SumRows,
  Block,
  Embed,
  Reshape,
  MinAll,
  SortRows,
  Affine,
  MinEig,
  RegInverse,
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
  double scalar() const { return value().scalar_value(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf whose gradient is tracked. A scratch tensor of the same shape, if
  // given, is reused as the gradient buffer.
  Var variable(Tensor value);
  Var variable(Tensor value, Tensor scratch);
  Var constant(Tensor value);
  Var constant(double v) { return constant(Tensor::scalar(v)); }

  const Tensor& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id())).value; }
  bool requires_grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id())).requires_grad; }

  // Populates gradients of every ancestor of a scalar loss. A second call
  // without reset_gradients() throws.
  void backward(Var loss);
  void reset_gradients();
  // Gradient with respect to v (zeros if v does not influence the loss).
  Tensor grad(Var v) const;
  // Move the stored value or gradient out of a sealed tape.
  Tensor take_value(Var v);
  Tensor take_grad(Var v);

  std::size_t size() const { return nodes_.size(); }

  struct Node {
    Op op = Op::Leaf;
    int a = -1;
    int b = -1;
    int c = -1;
    Tensor value;
    Tensor aux;
    std::vector<int> index;
    double param = 0.0;
    bool requires_grad = false;
  };

  Var push(Node node);
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

 private:
  void backprop_node(int id);
  Tensor& grad_buffer(int id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<std::pair<int, Tensor>> scratch_;
  bool backward_done_ = false;
};

// Elementwise; shapes must match or one operand must be 1 x 1.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var exp(Var a);
Var log2(Var a);
Var sqrt(Var a);
Var relu(Var a);  // relu'(0) = 0
Var sigmoid(Var a);
Var softplus(Var a);  // max(x, 0) + log(1 + e^{-|x|})
Var square(Var a);
Var abs(Var a);
Var cos(Var a);
Var sin(Var a);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var sum(Var a);
Var mean(Var a);
Var sum_rows(Var a);  // R x C -> R x 1
Var block(Var a, int r0, int c0, int rows, int cols);
Var embed(Var a, int rows, int cols, int r0, int c0);  // zero-padded
Var reshape(Var a, int rows, int cols);
Var min_all(Var a);    // hard min; gradient to the first argmin
Var sort_rows(Var a);  // ascending within every row
Var affine(Var w, Var x, Var b);  // w x + b

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }

// Complex tensor as a real/imaginary pair; im is absent for real tensors.
struct CVar {
  Var re;
  std::optional<Var> im;

  int rows() const { return re.rows(); }
  int cols() const { return re.cols(); }
};

CVar cadd(const CVar& a, const CVar& b);
CVar csub(const CVar& a, const CVar& b);
CVar cmul(const CVar& a, const CVar& b);  // elementwise
CVar cmatmul(const CVar& a, const CVar& b);
CVar conj(const CVar& a);
CVar ctranspose(const CVar& a);  // conjugate transpose
CVar cscale(const CVar& a, Var s);  // by a real 1 x 1 or same-shape tensor
CVar cblock(const CVar& a, int r0, int c0, int rows, int cols);
CVar cembed(const CVar& a, int rows, int cols, int r0, int c0);
Var abs2(const CVar& a);  // |a|^2 elementwise
Var imag_or_zero(const CVar& a);

// Smallest eigenvalue of the Hermitian matrix re + j im (symmetrized first).
// Backward uses d lambda / dM = v v^H.
Var min_eig(Var re, Var im);
inline Var min_eig(const CVar& m) { return min_eig(m.re, imag_or_zero(m)); }

// (Phi + eps I)^{-1}, eps = eps_rel * max(trace/N, floor), for Hermitian Phi.
CVar regularized_inverse(const CVar& phi, double eps_rel);

}  // namespace pinchsec::ad
