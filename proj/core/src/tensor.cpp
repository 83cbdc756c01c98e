#include "hnsf/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace hnsf::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

NodePtr make_node(const char* op, Shape shape, std::vector<double> value,
                  std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->is_leaf = false;
  n->inputs = std::move(inputs);
  n->op = op;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  for (const auto& in : n->inputs) {
    if (in->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_str(a) + " and " + shape_str(b));
}

void check_2d(const char* op, const Tensor& t) {
  if (t.shape().size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " +
                                shape_str(t.shape()));
  }
}

Tensor unary_elementwise(const char* op, const Tensor& x, double (*f)(double),
                         double (*df_from_y)(double, double)) {
  const auto& xv = x.node()->value;
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return Tensor(make_node(op, x.shape(), std::move(out), {x.node()},
                          [df_from_y](Node& n) {
                            Node& in = *n.inputs[0];
                            if (!in.requires_grad) return;
                            for (std::size_t i = 0; i < n.value.size(); ++i)
                              in.grad[i] +=
                                  n.grad[i] * df_from_y(in.value[i], n.value[i]);
                          }));
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

Node::~Node() {
  std::vector<NodePtr> pending(std::move(inputs));
  while (!pending.empty()) {
    NodePtr n = std::move(pending.back());
    pending.pop_back();
    if (n && n.use_count() == 1) {
      // sole owner: steal its inputs so destroying it cannot recurse
      for (auto& in : n->inputs) pending.push_back(std::move(in));
      n->inputs.clear();
    }
  }
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::leaf(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("leaf: shape " + shape_str(shape) +
                                " does not match " +
                                std::to_string(values.size()) + " values");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(shape_numel(shape), 0.0);
  return leaf(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return leaf({1, 1}, {v}, requires_grad);
}

Tensor Tensor::column(const std::vector<double>& values, bool requires_grad) {
  return leaf({values.size(), 1}, values, requires_grad);
}

std::size_t Tensor::rows() const {
  return node_->shape.empty() ? 1 : node_->shape[0];
}

std::size_t Tensor::cols() const {
  return node_->shape.size() < 2 ? 1 : node_->shape[1];
}

double Tensor::scalar_value() const {
  if (size() != 1) {
    throw std::invalid_argument("scalar_value: tensor has shape " +
                                shape_str(shape()));
  }
  return node_->value[0];
}

std::vector<double>& Tensor::mutable_values() {
  if (!node_->is_leaf) {
    throw std::logic_error("mutable_values: not a leaf tensor");
  }
  return node_->value;
}

std::vector<double>& Tensor::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

// --- binary elementwise --------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  if (a.shape() == b.shape()) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    return Tensor(make_node("add", a.shape(), std::move(out),
                            {a.node(), b.node()}, [](Node& n) {
                              Node& x = *n.inputs[0];
                              Node& y = *n.inputs[1];
                              if (x.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  x.grad[i] += n.grad[i];
                              if (y.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  y.grad[i] += n.grad[i];
                            }));
  }
  if (bv.size() == 1) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[0];
    return Tensor(make_node("add", a.shape(), std::move(out),
                            {a.node(), b.node()}, [](Node& n) {
                              Node& x = *n.inputs[0];
                              Node& y = *n.inputs[1];
                              if (x.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  x.grad[i] += n.grad[i];
                              if (y.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  y.grad[0] += n.grad[i];
                            }));
  }
  // Row-vector bias broadcast over rows.
  if (a.shape().size() == 2 && b.shape().size() == 2 && b.rows() == 1 &&
      b.cols() == a.cols()) {
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<double> out(av.size());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        out[r * cols + c] = av[r * cols + c] + bv[c];
    return Tensor(make_node(
        "add", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& n) {
          Node& x = *n.inputs[0];
          Node& y = *n.inputs[1];
          const std::size_t cols = n.shape[1];
          if (x.requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i)
              x.grad[i] += n.grad[i];
          if (y.requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i)
              y.grad[i % cols] += n.grad[i];
        }));
  }
  shape_error("add", a.shape(), b.shape());
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return add(a, scale(b, -1.0));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  if (a.shape() == b.shape()) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    return Tensor(make_node("mul", a.shape(), std::move(out),
                            {a.node(), b.node()}, [](Node& n) {
                              Node& x = *n.inputs[0];
                              Node& y = *n.inputs[1];
                              if (x.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  x.grad[i] += n.grad[i] * y.value[i];
                              if (y.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  y.grad[i] += n.grad[i] * x.value[i];
                            }));
  }
  if (bv.size() == 1) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[0];
    return Tensor(make_node("mul", a.shape(), std::move(out),
                            {a.node(), b.node()}, [](Node& n) {
                              Node& x = *n.inputs[0];
                              Node& y = *n.inputs[1];
                              if (x.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  x.grad[i] += n.grad[i] * y.value[0];
                              if (y.requires_grad)
                                for (std::size_t i = 0; i < n.grad.size(); ++i)
                                  y.grad[0] += n.grad[i] * x.value[i];
                            }));
  }
  shape_error("mul", a.shape(), b.shape());
}

Tensor scale(const Tensor& a, double c) {
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  return Tensor(make_node("scale", a.shape(), std::move(out), {a.node()},
                          [c](Node& n) {
                            Node& x = *n.inputs[0];
                            if (!x.requires_grad) return;
                            for (std::size_t i = 0; i < n.grad.size(); ++i)
                              x.grad[i] += n.grad[i] * c;
                          }));
}

// --- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d("matmul", a);
  check_2d("matmul", b);
  if (a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  const std::size_t R = a.rows(), K = a.cols(), C = b.cols();
  const double* av = a.node()->value.data();
  const double* bv = b.node()->value.data();
  std::vector<double> out(R * C, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    const double* arow = av + r * K;
    double* orow = out.data() + r * C;
    for (std::size_t k = 0; k < K; ++k) {
      const double x = arow[k];
      if (x == 0.0) continue;
      const double* brow = bv + k * C;
      for (std::size_t c = 0; c < C; ++c) orow[c] += x * brow[c];
    }
  }
  return Tensor(make_node(
      "matmul", {R, C}, std::move(out), {a.node(), b.node()}, [](Node& n) {
        Node& x = *n.inputs[0];
        Node& y = *n.inputs[1];
        const std::size_t R = n.shape[0], C = n.shape[1], K = x.shape[1];
        if (x.requires_grad) {
          // dA = g * B^T
          for (std::size_t r = 0; r < R; ++r) {
            const double* grow = n.grad.data() + r * C;
            double* xg = x.grad.data() + r * K;
            for (std::size_t k = 0; k < K; ++k) {
              const double* brow = y.value.data() + k * C;
              double acc = 0.0;
              for (std::size_t c = 0; c < C; ++c) acc += grow[c] * brow[c];
              xg[k] += acc;
            }
          }
        }
        if (y.requires_grad) {
          // dB = A^T * g
          for (std::size_t r = 0; r < R; ++r) {
            const double* arow = x.value.data() + r * K;
            const double* grow = n.grad.data() + r * C;
            for (std::size_t k = 0; k < K; ++k) {
              const double xv = arow[k];
              if (xv == 0.0) continue;
              double* yg = y.grad.data() + k * C;
              for (std::size_t c = 0; c < C; ++c) yg[c] += xv * grow[c];
            }
          }
        }
      }));
}

// --- elementwise unaries -----------------------------------------------------

Tensor tanh(const Tensor& x) {
  return unary_elementwise(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise(
      "sigmoid", x,
      [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor square(const Tensor& x) {
  return unary_elementwise(
      "square", x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Tensor log(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("log: input must be strictly positive");
    }
  }
  return unary_elementwise(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

// --- reductions --------------------------------------------------------------

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return Tensor(make_node("sum", {1, 1}, {acc}, {x.node()}, [](Node& n) {
    Node& in = *n.inputs[0];
    if (!in.requires_grad) return;
    const double g = n.grad[0];
    for (std::size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += g;
  }));
}

Tensor mean(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  return Tensor(
      make_node("mean", {1, 1}, {acc * inv}, {x.node()}, [inv](Node& n) {
        Node& in = *n.inputs[0];
        if (!in.requires_grad) return;
        const double g = n.grad[0] * inv;
        for (std::size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += g;
      }));
}

// --- slicing / concatenation --------------------------------------------------

Tensor slice(const Tensor& x, std::size_t r0, std::size_t nr, std::size_t c0,
             std::size_t nc) {
  check_2d("slice", x);
  const std::size_t R = x.rows(), C = x.cols();
  if (r0 + nr > R || c0 + nc > C) {
    throw std::invalid_argument("slice: window [" + std::to_string(r0) + "+" +
                                std::to_string(nr) + ", " + std::to_string(c0) +
                                "+" + std::to_string(nc) +
                                ") exceeds tensor shape " +
                                shape_str(x.shape()));
  }
  std::vector<double> out(nr * nc);
  const double* xv = x.node()->value.data();
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t c = 0; c < nc; ++c)
      out[r * nc + c] = xv[(r0 + r) * C + (c0 + c)];
  return Tensor(make_node("slice", {nr, nc}, std::move(out), {x.node()},
                          [r0, c0](Node& n) {
                            Node& in = *n.inputs[0];
                            if (!in.requires_grad) return;
                            const std::size_t C = in.shape[1];
                            const std::size_t nr = n.shape[0], nc = n.shape[1];
                            for (std::size_t r = 0; r < nr; ++r)
                              for (std::size_t c = 0; c < nc; ++c)
                                in.grad[(r0 + r) * C + (c0 + c)] +=
                                    n.grad[r * nc + c];
                          }));
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  for (const auto& p : parts) check_2d("concat", p);
  std::vector<NodePtr> inputs;
  inputs.reserve(parts.size());
  for (const auto& p : parts) inputs.push_back(p.node());

  if (axis == 0) {
    const std::size_t C = parts[0].cols();
    std::size_t R = 0;
    for (const auto& p : parts) {
      if (p.cols() != C) shape_error("concat", parts[0].shape(), p.shape());
      R += p.rows();
    }
    std::vector<double> out;
    out.reserve(R * C);
    for (const auto& p : parts)
      out.insert(out.end(), p.values().begin(), p.values().end());
    return Tensor(make_node("concat", {R, C}, std::move(out), std::move(inputs),
                            [](Node& n) {
                              std::size_t off = 0;
                              for (auto& inp : n.inputs) {
                                const std::size_t cnt = inp->value.size();
                                if (inp->requires_grad)
                                  for (std::size_t i = 0; i < cnt; ++i)
                                    inp->grad[i] += n.grad[off + i];
                                off += cnt;
                              }
                            }));
  }

  const std::size_t R = parts[0].rows();
  std::size_t C = 0;
  for (const auto& p : parts) {
    if (p.rows() != R) shape_error("concat", parts[0].shape(), p.shape());
    C += p.cols();
  }
  std::vector<double> out(R * C);
  std::size_t coff = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    const double* pv = p.node()->value.data();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < pc; ++c) out[r * C + coff + c] = pv[r * pc + c];
    coff += pc;
  }
  return Tensor(make_node("concat", {R, C}, std::move(out), std::move(inputs),
                          [](Node& n) {
                            const std::size_t R = n.shape[0], C = n.shape[1];
                            std::size_t coff = 0;
                            for (auto& inp : n.inputs) {
                              const std::size_t pc = inp->shape[1];
                              if (inp->requires_grad)
                                for (std::size_t r = 0; r < R; ++r)
                                  for (std::size_t c = 0; c < pc; ++c)
                                    inp->grad[r * pc + c] +=
                                        n.grad[r * C + coff + c];
                              coff += pc;
                            }
                          }));
}

// --- dilated convolution -------------------------------------------------------

Tensor conv1d_dilated(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      int dilation) {
  check_2d("conv1d", x);
  if (weight.shape().size() != 3) {
    throw std::invalid_argument("conv1d: weight must be (Cout, k, Cin), got " +
                                shape_str(weight.shape()));
  }
  if (dilation < 1) throw std::invalid_argument("conv1d: dilation must be >= 1");
  const std::size_t T = x.rows(), Cin = x.cols();
  const std::size_t Cout = weight.shape()[0], k = weight.shape()[1];
  if (weight.shape()[2] != Cin) shape_error("conv1d", weight.shape(), x.shape());
  if (k % 2 == 0) throw std::invalid_argument("conv1d: kernel width must be odd");
  if (bias.size() != Cout) shape_error("conv1d", bias.shape(), weight.shape());

  const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t d = dilation;
  const double* xv = x.node()->value.data();
  const double* wv = weight.node()->value.data();
  const double* bv = bias.node()->value.data();

  std::vector<double> out(T * Cout);
  for (std::size_t t = 0; t < T; ++t) {
    double* orow = out.data() + t * Cout;
    for (std::size_t co = 0; co < Cout; ++co) orow[co] = bv[co];
    for (std::size_t j = 0; j < k; ++j) {
      const std::ptrdiff_t s =
          static_cast<std::ptrdiff_t>(t) + (static_cast<std::ptrdiff_t>(j) - center) * d;
      if (s < 0 || s >= static_cast<std::ptrdiff_t>(T)) continue;
      const double* xrow = xv + static_cast<std::size_t>(s) * Cin;
      for (std::size_t co = 0; co < Cout; ++co) {
        const double* wrow = wv + (co * k + j) * Cin;
        double acc = 0.0;
        for (std::size_t ci = 0; ci < Cin; ++ci) acc += wrow[ci] * xrow[ci];
        orow[co] += acc;
      }
    }
  }

  return Tensor(make_node(
      "conv1d", {T, Cout}, std::move(out),
      {x.node(), weight.node(), bias.node()}, [dilation](Node& n) {
        Node& x = *n.inputs[0];
        Node& w = *n.inputs[1];
        Node& b = *n.inputs[2];
        const std::size_t T = n.shape[0], Cout = n.shape[1];
        const std::size_t k = w.shape[1], Cin = w.shape[2];
        const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(k / 2);
        const std::ptrdiff_t d = dilation;
        if (b.requires_grad) {
          for (std::size_t t = 0; t < T; ++t) {
            const double* grow = n.grad.data() + t * Cout;
            for (std::size_t co = 0; co < Cout; ++co) b.grad[co] += grow[co];
          }
        }
        for (std::size_t t = 0; t < T; ++t) {
          const double* grow = n.grad.data() + t * Cout;
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t s =
                static_cast<std::ptrdiff_t>(t) +
                (static_cast<std::ptrdiff_t>(j) - center) * d;
            if (s < 0 || s >= static_cast<std::ptrdiff_t>(T)) continue;
            const std::size_t su = static_cast<std::size_t>(s);
            if (x.requires_grad) {
              double* xg = x.grad.data() + su * Cin;
              for (std::size_t co = 0; co < Cout; ++co) {
                const double g = grow[co];
                if (g == 0.0) continue;
                const double* wrow = w.value.data() + (co * k + j) * Cin;
                for (std::size_t ci = 0; ci < Cin; ++ci) xg[ci] += g * wrow[ci];
              }
            }
            if (w.requires_grad) {
              const double* xrow = x.value.data() + su * Cin;
              for (std::size_t co = 0; co < Cout; ++co) {
                const double g = grow[co];
                if (g == 0.0) continue;
                double* wg = w.grad.data() + (co * k + j) * Cin;
                for (std::size_t ci = 0; ci < Cin; ++ci) wg[ci] += g * xrow[ci];
              }
            }
          }
        }
      }));
}

// --- row manipulation ops --------------------------------------------------------

Tensor repeat_rows(const Tensor& x, std::size_t factor) {
  check_2d("repeat_rows", x);
  if (factor < 1) throw std::invalid_argument("repeat_rows: factor must be >= 1");
  const std::size_t R = x.rows(), C = x.cols();
  std::vector<double> out(R * factor * C);
  const double* xv = x.node()->value.data();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t f = 0; f < factor; ++f)
      std::copy(xv + r * C, xv + (r + 1) * C, out.data() + (r * factor + f) * C);
  return Tensor(make_node("repeat_rows", {R * factor, C}, std::move(out),
                          {x.node()}, [factor](Node& n) {
                            Node& in = *n.inputs[0];
                            if (!in.requires_grad) return;
                            const std::size_t C = n.shape[1];
                            const std::size_t R = in.shape[0];
                            for (std::size_t r = 0; r < R; ++r)
                              for (std::size_t f = 0; f < factor; ++f) {
                                const double* g =
                                    n.grad.data() + (r * factor + f) * C;
                                double* ig = in.grad.data() + r * C;
                                for (std::size_t c = 0; c < C; ++c) ig[c] += g[c];
                              }
                          }));
}

Tensor reverse_rows(const Tensor& x) {
  check_2d("reverse_rows", x);
  const std::size_t R = x.rows(), C = x.cols();
  std::vector<double> out(R * C);
  const double* xv = x.node()->value.data();
  for (std::size_t r = 0; r < R; ++r)
    std::copy(xv + r * C, xv + (r + 1) * C, out.data() + (R - 1 - r) * C);
  return Tensor(make_node("reverse_rows", {R, C}, std::move(out), {x.node()},
                          [](Node& n) {
                            Node& in = *n.inputs[0];
                            if (!in.requires_grad) return;
                            const std::size_t R = n.shape[0], C = n.shape[1];
                            for (std::size_t r = 0; r < R; ++r) {
                              const double* g = n.grad.data() + (R - 1 - r) * C;
                              double* ig = in.grad.data() + r * C;
                              for (std::size_t c = 0; c < C; ++c) ig[c] += g[c];
                            }
                          }));
}

Tensor moving_average_rows(const Tensor& x, std::size_t radius) {
  check_2d("moving_average_rows", x);
  const std::size_t R = x.rows(), C = x.cols();
  const std::ptrdiff_t rad = static_cast<std::ptrdiff_t>(radius);
  const double inv = 1.0 / static_cast<double>(2 * radius + 1);
  const double* xv = x.node()->value.data();
  std::vector<double> out(R * C, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::ptrdiff_t o = -rad; o <= rad; ++o) {
      std::ptrdiff_t s = static_cast<std::ptrdiff_t>(r) + o;
      s = std::clamp<std::ptrdiff_t>(s, 0, static_cast<std::ptrdiff_t>(R) - 1);
      const double* xrow = xv + static_cast<std::size_t>(s) * C;
      double* orow = out.data() + r * C;
      for (std::size_t c = 0; c < C; ++c) orow[c] += xrow[c];
    }
  }
  for (double& v : out) v *= inv;
  return Tensor(make_node(
      "moving_average", {R, C}, std::move(out), {x.node()}, [rad, inv](Node& n) {
        Node& in = *n.inputs[0];
        if (!in.requires_grad) return;
        const std::size_t R = n.shape[0], C = n.shape[1];
        for (std::size_t r = 0; r < R; ++r) {
          const double* g = n.grad.data() + r * C;
          for (std::ptrdiff_t o = -rad; o <= rad; ++o) {
            std::ptrdiff_t s = static_cast<std::ptrdiff_t>(r) + o;
            s = std::clamp<std::ptrdiff_t>(s, 0, static_cast<std::ptrdiff_t>(R) - 1);
            double* ig = in.grad.data() + static_cast<std::size_t>(s) * C;
            for (std::size_t c = 0; c < C; ++c) ig[c] += g[c] * inv;
          }
        }
      }));
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  const auto& xv = x.node()->value;
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::clamp(xv[i], lo, hi);
  return Tensor(make_node("clamp", x.shape(), std::move(out), {x.node()},
                          [lo, hi](Node& n) {
                            Node& in = *n.inputs[0];
                            if (!in.requires_grad) return;
                            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                              const double v = in.value[i];
                              if (v > lo && v < hi) in.grad[i] += n.grad[i];
                            }
                          }));
}

Tensor custom_op(const char* name, std::vector<Tensor> inputs, Shape out_shape,
                 std::vector<double> out_values,
                 std::function<void(Node&)> backward) {
  if (shape_numel(out_shape) != out_values.size()) {
    throw std::invalid_argument(std::string(name) + ": output shape " +
                                shape_str(out_shape) + " does not match " +
                                std::to_string(out_values.size()) + " values");
  }
  std::vector<NodePtr> in;
  in.reserve(inputs.size());
  for (const auto& t : inputs) in.push_back(t.node());
  return Tensor(make_node(name, std::move(out_shape), std::move(out_values),
                          std::move(in), std::move(backward)));
}

// --- backward sweep -----------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument(
        "backward: loss must be a scalar, got " +
        (loss.defined() ? shape_str(loss.shape()) : std::string("<empty>")));
  }
  // Iterative post-order DFS; input order is fixed, so the sweep order (and
  // therefore every floating-point accumulation) is reproducible.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    std::size_t next_input;
  };
  std::vector<Frame> stack;
  Node* root = loss.node().get();
  if (root->requires_grad) {
    stack.push_back({root, 0});
    visited.insert(root);
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_input < f.node->inputs.size()) {
      Node* child = f.node->inputs[f.next_input++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backprop) continue;
    for (const auto& in : n->inputs) {
      if (in->requires_grad) in->ensure_grad();
    }
    n->backprop(*n);
  }
}

}  // namespace hnsf::ad
