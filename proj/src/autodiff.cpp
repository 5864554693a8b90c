#include "pinchsec/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pinchsec/numerics.hpp"

namespace pinchsec::ad {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

Tape* tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
  return a.tape();
}

bool broadcastable(const Tensor& a, const Tensor& b) {
  return (a.rows == b.rows && a.cols == b.cols) || a.is_scalar() || b.is_scalar();
}

Tensor shape_for(const Tensor& a, const Tensor& b) {
  if (a.is_scalar()) return Tensor(b.rows, b.cols);
  return Tensor(a.rows, a.cols);
}

template <class F>
Var binary(Op op, Var a, Var b, F f) {
  Tape* t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!broadcastable(x, y))
    throw std::invalid_argument("shape mismatch: " + std::to_string(x.rows) + "x" +
                                std::to_string(x.cols) + " vs " + std::to_string(y.rows) + "x" +
                                std::to_string(y.cols));
  Tensor out = shape_for(x, y);
  const bool sx = x.is_scalar() && !y.is_scalar();
  const bool sy = y.is_scalar() && !x.is_scalar();
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = f(x.data[sx ? 0 : i], y.data[sy ? 0 : i]);
  Tape::Node n;
  n.op = op;
  n.a = a.id();
  n.b = b.id();
  n.value = std::move(out);
  return t->push(std::move(n));
}

template <class F>
Var unary(Op op, Var a, F f, double param = 0.0) {
  const Tensor& x = a.value();
  Tensor out(x.rows, x.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = f(x.data[i]);
  Tape::Node n;
  n.op = op;
  n.a = a.id();
  n.param = param;
  n.value = std::move(out);
  return a.tape()->push(std::move(n));
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// dst += src, reducing over broadcast if dst is 1 x 1 and src is not.
void accumulate(Tensor& dst, const Tensor& src) {
  if (dst.size() == src.size()) {
    for (std::size_t i = 0; i < src.size(); ++i) dst.data[i] += src.data[i];
  } else {
    double s = 0.0;
    for (double v : src.data) s += v;
    dst.data[0] += s;
  }
}

CMatrix to_complex(const Tensor& re, const Tensor* im) {
  CMatrix m(re.rows, re.cols);
  for (int r = 0; r < re.rows; ++r)
    for (int c = 0; c < re.cols; ++c) m(r, c) = Complex(re(r, c), im ? (*im)(r, c) : 0.0);
  return m;
}

}  // namespace

Tensor Tensor::from(int r, int c, std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(r) * c)
    throw std::invalid_argument("tensor data size does not match shape");
  Tensor t;
  t.rows = r;
  t.cols = c;
  t.data = std::move(values);
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t(n, n);
  for (int i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

double Tensor::scalar_value() const {
  if (!is_scalar()) throw std::invalid_argument("tensor is not a scalar");
  return data[0];
}

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("unbound variable");
  return tape_->value(*this);
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::variable(Tensor value, Tensor scratch) {
  const Var v = variable(std::move(value));
  const Tensor& val = nodes_.back().value;
  if (scratch.rows == val.rows && scratch.cols == val.cols)
    scratch_.emplace_back(v.id(), std::move(scratch));
  return v;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::push(Node node) {
  if (backward_done_) throw std::logic_error("tape is sealed after backward");
  auto req = [&](int id) { return id >= 0 && nodes_[static_cast<std::size_t>(id)].requires_grad; };
  if (node.op != Op::Leaf) node.requires_grad = req(node.a) || req(node.b) || req(node.c);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Tape::grad_buffer(int id) {
  Tensor& g = grads_[static_cast<std::size_t>(id)];
  if (g.size() == 0 && nodes_[static_cast<std::size_t>(id)].value.size() > 0) {
    const Tensor& v = nodes_[static_cast<std::size_t>(id)].value;
    g = Tensor(v.rows, v.cols);
  }
  return g;
}

void Tape::reset_gradients() {
  grads_.clear();
  backward_done_ = false;
}

Tensor Tape::grad(Var v) const {
  const auto id = static_cast<std::size_t>(v.id());
  if (id < grads_.size() && grads_[id].size() > 0) return grads_[id];
  const Tensor& val = nodes_.at(id).value;
  return Tensor(val.rows, val.cols);
}

Tensor Tape::take_value(Var v) {
  if (!backward_done_) throw std::logic_error("take_value needs a sealed tape");
  return std::move(nodes_.at(static_cast<std::size_t>(v.id())).value);
}

Tensor Tape::take_grad(Var v) {
  const auto id = static_cast<std::size_t>(v.id());
  if (id < grads_.size() && grads_[id].size() > 0) return std::move(grads_[id]);
  return grad(v);
}

void Tape::backward(Var loss) {
  if (backward_done_) throw std::logic_error("backward already ran on this tape");
  if (loss.tape() != this) throw std::invalid_argument("loss belongs to another tape");
  if (!value(loss).is_scalar()) throw std::invalid_argument("loss must be a scalar");
  grads_.assign(nodes_.size(), Tensor());
  for (auto& [id, buf] : scratch_) {
    std::fill(buf.data.begin(), buf.data.end(), 0.0);
    grads_[static_cast<std::size_t>(id)] = std::move(buf);
  }
  scratch_.clear();
  grad_buffer(loss.id()).data[0] = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::Leaf || !n.requires_grad) continue;
    if (grads_[static_cast<std::size_t>(id)].size() == 0) continue;
    backprop_node(id);
  }
  backward_done_ = true;
}

void Tape::backprop_node(int id) {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  const Tensor& g = grads_[static_cast<std::size_t>(id)];
  const Tensor& out = n.value;
  auto wants = [&](int in) { return in >= 0 && nodes_[static_cast<std::size_t>(in)].requires_grad; };
  auto val = [&](int in) -> const Tensor& { return nodes_[static_cast<std::size_t>(in)].value; };

  switch (n.op) {
    case Op::Leaf:
      return;
    case Op::Add:
    case Op::Sub: {
      if (wants(n.a)) accumulate(grad_buffer(n.a), g);
      if (wants(n.b)) {
        Tensor gb = g;
        if (n.op == Op::Sub)
          for (double& v : gb.data) v = -v;
        accumulate(grad_buffer(n.b), gb);
      }
      return;
    }
    case Op::Mul:
    case Op::Div: {
      const Tensor& x = val(n.a);
      const Tensor& y = val(n.b);
      const bool sx = x.is_scalar() && !y.is_scalar();
      const bool sy = y.is_scalar() && !x.is_scalar();
      auto xi = [&](std::size_t i) { return x.data[sx ? 0 : i]; };
      auto yi = [&](std::size_t i) { return y.data[sy ? 0 : i]; };
      if (wants(n.a)) {
        Tensor ga(g.rows, g.cols);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga.data[i] = n.op == Op::Mul ? g.data[i] * yi(i) : g.data[i] / yi(i);
        accumulate(grad_buffer(n.a), ga);
      }
      if (wants(n.b)) {
        Tensor gb(g.rows, g.cols);
        for (std::size_t i = 0; i < g.size(); ++i)
          gb.data[i] = n.op == Op::Mul ? g.data[i] * xi(i) : -g.data[i] * out.data[i] / yi(i);
        accumulate(grad_buffer(n.b), gb);
      }
      return;
    }
    default:
      break;
  }

  if (!wants(n.a) && !wants(n.b) && !wants(n.c)) return;
  const Tensor& x = val(n.a);

  switch (n.op) {
    case Op::Neg:
    case Op::Scale:
    case Op::AddScalar:
    case Op::Exp:
    case Op::Log2:
    case Op::Sqrt:
    case Op::Relu:
    case Op::Sigmoid:
    case Op::Softplus:
    case Op::Square:
    case Op::Abs:
    case Op::Cos:
    case Op::Sin: {
      Tensor& ga = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double xv = x.data[i];
        const double yv = out.data[i];
        double d = 0.0;
        switch (n.op) {
          case Op::Neg: d = -1.0; break;
          case Op::Scale: d = n.param; break;
          case Op::AddScalar: d = 1.0; break;
          case Op::Exp: d = yv; break;
          case Op::Log2: d = 1.0 / (xv * kLn2); break;
          case Op::Sqrt: d = yv > 0.0 ? 0.5 / yv : 0.0; break;
          case Op::Relu: d = xv > 0.0 ? 1.0 : 0.0; break;
          case Op::Sigmoid: d = yv * (1.0 - yv); break;
          case Op::Softplus: d = sigmoid_value(xv); break;
          case Op::Square: d = 2.0 * xv; break;
          case Op::Abs: d = xv > 0.0 ? 1.0 : (xv < 0.0 ? -1.0 : 0.0); break;
          case Op::Cos: d = -std::sin(xv); break;
          case Op::Sin: d = std::cos(xv); break;
          default: break;
        }
        ga.data[i] += g.data[i] * d;
      }
      return;
    }
    case Op::MatMul: {
      const Tensor& y = val(n.b);
      const int r = x.rows, k = x.cols, c = y.cols;
      if (wants(n.a)) {
        Tensor& ga = grad_buffer(n.a);  // G B^T
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) {
            const double gij = g(i, j);
            if (gij == 0.0) continue;
            for (int p = 0; p < k; ++p) ga(i, p) += gij * y(p, j);
          }
      }
      if (wants(n.b)) {
        Tensor& gb = grad_buffer(n.b);  // A^T G
        for (int i = 0; i < r; ++i)
          for (int p = 0; p < k; ++p) {
            const double aip = x(i, p);
            if (aip == 0.0) continue;
            for (int j = 0; j < c; ++j) gb(p, j) += aip * g(i, j);
          }
      }
      return;
    }
    case Op::Affine: {
      // out = W x + b with W = a, x = b, bias = c
      const Tensor& w = x;
      const Tensor& in = val(n.b);
      const int r = w.rows, k = w.cols;
      if (wants(n.a)) {
        Tensor& gw = grad_buffer(n.a);
        for (int i = 0; i < r; ++i) {
          const double gi = g.data[static_cast<std::size_t>(i)];
          if (gi == 0.0) continue;
          double* row = &gw.data[static_cast<std::size_t>(i) * k];
          for (int p = 0; p < k; ++p) row[p] += gi * in.data[static_cast<std::size_t>(p)];
        }
      }
      if (wants(n.b)) {
        Tensor& gx = grad_buffer(n.b);
        for (int i = 0; i < r; ++i) {
          const double gi = g.data[static_cast<std::size_t>(i)];
          if (gi == 0.0) continue;
          const double* row = &w.data[static_cast<std::size_t>(i) * k];
          for (int p = 0; p < k; ++p) gx.data[static_cast<std::size_t>(p)] += gi * row[p];
        }
      }
      if (wants(n.c)) accumulate(grad_buffer(n.c), g);
      return;
    }
    case Op::Transpose: {
      Tensor& ga = grad_buffer(n.a);
      for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) ga(i, j) += g(j, i);
      return;
    }
    case Op::Sum: {
      Tensor& ga = grad_buffer(n.a);
      for (double& v : ga.data) v += g.data[0];
      return;
    }
    case Op::SumRows: {
      Tensor& ga = grad_buffer(n.a);
      for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) ga(i, j) += g.data[static_cast<std::size_t>(i)];
      return;
    }
    case Op::Block: {
      Tensor& ga = grad_buffer(n.a);
      const int r0 = n.index[0], c0 = n.index[1];
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) ga(r0 + i, c0 + j) += g(i, j);
      return;
    }
    case Op::Embed: {
      Tensor& ga = grad_buffer(n.a);
      const int r0 = n.index[0], c0 = n.index[1];
      for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) ga(i, j) += g(r0 + i, c0 + j);
      return;
    }
    case Op::Reshape: {
      Tensor& ga = grad_buffer(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      return;
    }
    case Op::MinAll: {
      grad_buffer(n.a).data[static_cast<std::size_t>(n.index[0])] += g.data[0];
      return;
    }
    case Op::SortRows: {
      Tensor& ga = grad_buffer(n.a);
      for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j)
          ga(i, n.index[static_cast<std::size_t>(i) * x.cols + j]) += g(i, j);
      return;
    }
    case Op::MinEig: {
      // aux holds [Re v, Im v] as an n x 2 tensor.
      const int dim = x.rows;
      const double gs = g.data[0];
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
          const Complex vi(n.aux(i, 0), n.aux(i, 1));
          const Complex vj(n.aux(j, 0), n.aux(j, 1));
          const Complex p = vi * std::conj(vj);
          if (wants(n.a)) grad_buffer(n.a)(i, j) += gs * p.real();
          if (wants(n.b)) grad_buffer(n.b)(i, j) += gs * p.imag();
        }
      }
      return;
    }
    case Op::RegInverse: {
      // out = [Re B; Im B]. With G = dL/dRe B + j dL/dIm B, the adjoint of
      // A = sym(Phi) + eps I is -B G B.
      const int dim = x.rows;
      CMatrix b(dim, dim), gc(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          b(i, j) = Complex(out(i, j), out(dim + i, j));
          gc(i, j) = Complex(g(i, j), g(dim + i, j));
        }
      const CMatrix abar = -(b * gc * b);
      CMatrix phibar = 0.5 * (abar + abar.adjoint());
      if (n.param > 0.0) {
        const double coeff = n.param * abar.trace().real();
        for (int i = 0; i < dim; ++i) phibar(i, i) += coeff;
      }
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          if (wants(n.a)) grad_buffer(n.a)(i, j) += phibar(i, j).real();
          if (wants(n.b)) grad_buffer(n.b)(i, j) += phibar(i, j).imag();
        }
      return;
    }
    default:
      throw std::logic_error("unhandled op in backward");
  }
}

Var add(Var a, Var b) { return binary(Op::Add, a, b, [](double x, double y) { return x + y; }); }
Var sub(Var a, Var b) { return binary(Op::Sub, a, b, [](double x, double y) { return x - y; }); }
Var mul(Var a, Var b) { return binary(Op::Mul, a, b, [](double x, double y) { return x * y; }); }
Var div(Var a, Var b) {
  for (double v : b.value().data)
    if (v == 0.0) throw DomainError("division by zero");
  return binary(Op::Div, a, b, [](double x, double y) { return x / y; });
}
Var neg(Var a) { return unary(Op::Neg, a, [](double x) { return -x; }); }
Var scale(Var a, double c) { return unary(Op::Scale, a, [c](double x) { return c * x; }, c); }
Var add_scalar(Var a, double c) {
  return unary(Op::AddScalar, a, [c](double x) { return x + c; }, c);
}
Var exp(Var a) { return unary(Op::Exp, a, [](double x) { return std::exp(x); }); }
Var log2(Var a) {
  for (double v : a.value().data)
    if (!(v > 0.0)) throw DomainError("log2 of a non-positive value");
  return unary(Op::Log2, a, [](double x) { return std::log2(x); });
}
Var sqrt(Var a) {
  for (double v : a.value().data)
    if (v < 0.0) throw DomainError("sqrt of a negative value");
  return unary(Op::Sqrt, a, [](double x) { return std::sqrt(x); });
}
Var relu(Var a) { return unary(Op::Relu, a, [](double x) { return x > 0.0 ? x : 0.0; }); }
Var sigmoid(Var a) { return unary(Op::Sigmoid, a, sigmoid_value); }
Var softplus(Var a) {
  return unary(Op::Softplus, a,
               [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
}
Var square(Var a) { return unary(Op::Square, a, [](double x) { return x * x; }); }
Var abs(Var a) { return unary(Op::Abs, a, [](double x) { return std::abs(x); }); }
Var cos(Var a) { return unary(Op::Cos, a, [](double x) { return std::cos(x); }); }
Var sin(Var a) { return unary(Op::Sin, a, [](double x) { return std::sin(x); }); }

Var matmul(Var a, Var b) {
  Tape* t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols != y.rows) throw std::invalid_argument("matmul inner dimensions differ");
  Tensor out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int p = 0; p < x.cols; ++p) {
      const double xip = x(i, p);
      if (xip == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) out(i, j) += xip * y(p, j);
    }
  Tape::Node n;
  n.op = Op::MatMul;
  n.a = a.id();
  n.b = b.id();
  n.value = std::move(out);
  return t->push(std::move(n));
}

Var affine(Var w, Var x, Var b) {
  Tape* t = tape_of(w, x);
  tape_of(w, b);
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  if (xv.cols != 1 || wv.cols != xv.rows || bv.rows != wv.rows || bv.cols != 1)
    throw std::invalid_argument("affine shape mismatch");
  Tensor out = bv;
  const int k = wv.cols;
  for (int i = 0; i < wv.rows; ++i) {
    const double* row = &wv.data[static_cast<std::size_t>(i) * k];
    double s = 0.0;
    for (int p = 0; p < k; ++p) s += row[p] * xv.data[static_cast<std::size_t>(p)];
    out.data[static_cast<std::size_t>(i)] += s;
  }
  Tape::Node n;
  n.op = Op::Affine;
  n.a = w.id();
  n.b = x.id();
  n.c = b.id();
  n.value = std::move(out);
  return t->push(std::move(n));
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
  Tape::Node n;
  n.op = Op::Transpose;
  n.a = a.id();
  n.value = std::move(out);
  return a.tape()->push(std::move(n));
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  Tape::Node n;
  n.op = Op::Sum;
  n.a = a.id();
  n.value = Tensor::scalar(s);
  return a.tape()->push(std::move(n));
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_rows(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.rows, 1);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out.data[static_cast<std::size_t>(i)] += x(i, j);
  Tape::Node n;
  n.op = Op::SumRows;
  n.a = a.id();
  n.value = std::move(out);
  return a.tape()->push(std::move(n));
}

Var block(Var a, int r0, int c0, int rows, int cols) {
  const Tensor& x = a.value();
  if (r0 < 0 || c0 < 0 || rows < 0 || cols < 0 || r0 + rows > x.rows || c0 + cols > x.cols)
    throw std::out_of_range("block outside tensor");
  Tensor out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = x(r0 + i, c0 + j);
  Tape::Node n;
  n.op = Op::Block;
  n.a = a.id();
  n.index = {r0, c0};
  n.value = std::move(out);
  return a.tape()->push(std::move(n));
}

Var embed(Var a, int rows, int cols, int r0, int c0) {
  const Tensor& x = a.value();
  if (r0 < 0 || c0 < 0 || r0 + x.rows > rows || c0 + x.cols > cols)
    throw std::out_of_range("embed outside target");
  Tensor out(rows, cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out(r0 + i, c0 + j) = x(i, j);
  Tape::Node n;
  n.op = Op::Embed;
  n.a = a.id();
  n.index = {r0, c0};
  n.value = std::move(out);
  return a.tape()->push(std::move(n));
}

Var reshape(Var a, int rows, int cols) {
  const Tensor& x = a.value();
  if (static_cast<std::size_t>(rows) * cols != x.size())
    throw std::invalid_argument("reshape changes element count");
  Tape::Node n;
  n.op = Op::Reshape;
  n.a = a.id();
  n.value = Tensor::from(rows, cols, x.data);
  return a.tape()->push(std::move(n));
}

Var min_all(Var a) {
  const Tensor& x = a.value();
  if (x.size() == 0) throw std::invalid_argument("min of an empty tensor");
  const auto it = std::min_element(x.data.begin(), x.data.end());
  Tape::Node n;
  n.op = Op::MinAll;
  n.a = a.id();
  n.index = {static_cast<int>(it - x.data.begin())};
  n.value = Tensor::scalar(*it);
  return a.tape()->push(std::move(n));
}

Var sort_rows(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.rows, x.cols);
  std::vector<int> perm(x.size());
  for (int i = 0; i < x.rows; ++i) {
    int* p = &perm[static_cast<std::size_t>(i) * x.cols];
    std::iota(p, p + x.cols, 0);
    std::stable_sort(p, p + x.cols, [&](int u, int v) { return x(i, u) < x(i, v); });
    for (int j = 0; j < x.cols; ++j) out(i, j) = x(i, p[j]);
  }
  Tape::Node n;
  n.op = Op::SortRows;
  n.a = a.id();
  n.index = std::move(perm);
  n.value = std::move(out);
  return a.tape()->push(std::move(n));
}

// ---------------------------------------------------------------- complex

Var imag_or_zero(const CVar& a) {
  if (a.im) return *a.im;
  return a.re.tape()->constant(Tensor(a.rows(), a.cols()));
}

CVar cadd(const CVar& a, const CVar& b) {
  CVar out{add(a.re, b.re), std::nullopt};
  if (a.im && b.im) out.im = add(*a.im, *b.im);
  else if (a.im) out.im = a.im;
  else if (b.im) out.im = b.im;
  return out;
}

CVar csub(const CVar& a, const CVar& b) {
  CVar out{sub(a.re, b.re), std::nullopt};
  if (a.im && b.im) out.im = sub(*a.im, *b.im);
  else if (a.im) out.im = a.im;
  else if (b.im) out.im = neg(*b.im);
  return out;
}

CVar cmul(const CVar& a, const CVar& b) {
  if (!a.im && !b.im) return {mul(a.re, b.re), std::nullopt};
  if (!a.im) return {mul(a.re, b.re), mul(a.re, *b.im)};
  if (!b.im) return {mul(a.re, b.re), mul(*a.im, b.re)};
  return {sub(mul(a.re, b.re), mul(*a.im, *b.im)), add(mul(a.re, *b.im), mul(*a.im, b.re))};
}

CVar cmatmul(const CVar& a, const CVar& b) {
  if (!a.im && !b.im) return {matmul(a.re, b.re), std::nullopt};
  if (!a.im) return {matmul(a.re, b.re), matmul(a.re, *b.im)};
  if (!b.im) return {matmul(a.re, b.re), matmul(*a.im, b.re)};
  return {sub(matmul(a.re, b.re), matmul(*a.im, *b.im)),
          add(matmul(a.re, *b.im), matmul(*a.im, b.re))};
}

CVar conj(const CVar& a) {
  if (!a.im) return a;
  return {a.re, neg(*a.im)};
}

CVar ctranspose(const CVar& a) {
  CVar out{transpose(a.re), std::nullopt};
  if (a.im) out.im = neg(transpose(*a.im));
  return out;
}

CVar cscale(const CVar& a, Var s) {
  CVar out{mul(a.re, s), std::nullopt};
  if (a.im) out.im = mul(*a.im, s);
  return out;
}

CVar cblock(const CVar& a, int r0, int c0, int rows, int cols) {
  CVar out{block(a.re, r0, c0, rows, cols), std::nullopt};
  if (a.im) out.im = block(*a.im, r0, c0, rows, cols);
  return out;
}

CVar cembed(const CVar& a, int rows, int cols, int r0, int c0) {
  CVar out{embed(a.re, rows, cols, r0, c0), std::nullopt};
  if (a.im) out.im = embed(*a.im, rows, cols, r0, c0);
  return out;
}

Var abs2(const CVar& a) {
  if (!a.im) return square(a.re);
  return add(square(a.re), square(*a.im));
}

Var min_eig(Var re, Var im) {
  Tape* t = tape_of(re, im);
  const Tensor& r = re.value();
  const Tensor& i = im.value();
  if (r.rows != r.cols || i.rows != r.rows || i.cols != r.cols)
    throw std::invalid_argument("min_eig needs a square matrix");
  const CMatrix m = to_complex(r, &i);
  const MinEigen e = pinchsec::min_eig(0.5 * (m + m.adjoint()));
  Tape::Node n;
  n.op = Op::MinEig;
  n.a = re.id();
  n.b = im.id();
  n.aux = Tensor(r.rows, 2);
  for (int k = 0; k < r.rows; ++k) {
    n.aux(k, 0) = e.vector(k).real();
    n.aux(k, 1) = e.vector(k).imag();
  }
  n.value = Tensor::scalar(e.value);
  return t->push(std::move(n));
}

CVar regularized_inverse(const CVar& phi, double eps_rel) {
  const Var im = imag_or_zero(phi);
  Tape* t = tape_of(phi.re, im);
  const Tensor& r = phi.re.value();
  const int dim = r.rows;
  if (r.rows != r.cols) throw std::invalid_argument("regularized_inverse needs a square matrix");
  const CMatrix m = to_complex(r, &im.value());
  const CMatrix sym = 0.5 * (m + m.adjoint());
  const CMatrix inv = pinchsec::regularized_inverse(sym, eps_rel);
  Tape::Node n;
  n.op = Op::RegInverse;
  n.a = phi.re.id();
  n.b = im.id();
  const bool above_floor = sym.trace().real() / dim > kRegularizationFloor;
  n.param = above_floor ? eps_rel / dim : 0.0;
  n.value = Tensor(2 * dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      n.value(a, b) = inv(a, b).real();
      n.value(dim + a, b) = inv(a, b).imag();
    }
  const Var stacked = t->push(std::move(n));
  return {block(stacked, 0, 0, dim, dim), block(stacked, dim, 0, dim, dim)};
}

}  // namespace pinchsec::ad
