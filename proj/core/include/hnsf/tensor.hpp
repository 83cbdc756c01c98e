// Reverse-mode automatic differentiation on dense 64-bit float tensors.
//
// A Tensor is a handle to a graph node. Operations build new nodes that
// keep shared ownership of their inputs, so a graph lives exactly as long
// as some handle into it; parameters persist across graphs because the
// model owns them. backward() runs a deterministic reverse topological
// sweep and accumulates gradients with +=.

#ifndef HNSF_TENSOR_HPP_
#define HNSF_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hnsf::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward touches this node
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<NodePtr> inputs;
  // Reads this->grad, accumulates into inputs' grads. Null for leaves.
  std::function<void(Node&)> backprop;
  const char* op = "leaf";
  std::uint64_t id = 0;

  // Releases the input chain iteratively; graphs can be thousands of nodes
  // deep (one per LSTM step) and naive shared_ptr teardown would recurse.
  ~Node();

  void ensure_grad();  // allocate zeroed grad buffer if missing
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  // 1-D sequence stored as a column (T x 1).
  static Tensor column(const std::vector<double>& values,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  double value_at(std::size_t i) const { return node_->value[i]; }
  double scalar_value() const;

  // Mutable access is for leaves only (parameter updates, finite-difference
  // probes). Mutating an interior node would desynchronize the graph.
  std::vector<double>& mutable_values();

  bool grad_allocated() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::vector<double>& mutable_grad();
  void zero_grad();

  const NodePtr& node() const { return node_; }
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

 private:
  NodePtr node_;
};

// --- Graph construction -----------------------------------------------

// Elementwise add. Accepts equal shapes, a scalar (1-element) second
// operand broadcast over all elements, or a row-vector bias (1 x C)
// broadcast over the rows of an (R x C) first operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise multiply; equal shapes or scalar second operand.
Tensor mul(const Tensor& a, const Tensor& b);
// Multiply by a compile-time constant.
Tensor scale(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);  // (R x K) * (K x C)

Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor square(const Tensor& x);
Tensor log(const Tensor& x);  // natural log, input must be positive

Tensor sum(const Tensor& x);   // scalar
Tensor mean(const Tensor& x);  // scalar

// Rectangular 2-D slice: rows [r0, r0+nr), cols [c0, c0+nc).
Tensor slice(const Tensor& x, std::size_t r0, std::size_t nr, std::size_t c0,
             std::size_t nc);
// Concatenate along rows (axis 0) or columns (axis 1).
Tensor concat(const std::vector<Tensor>& parts, int axis);

// Length-preserving dilated 1-D convolution over rows of x (T x Cin).
// Weight shape is (Cout, k, Cin), bias (Cout); k odd, zero padding of
// (k-1)*d/2 rows on each side.
Tensor conv1d_dilated(const Tensor& x, const Tensor& weight,
                      const Tensor& bias, int dilation);

// Frame-rate to sample-rate upsampling: each row repeated `factor` times.
Tensor repeat_rows(const Tensor& x, std::size_t factor);
Tensor reverse_rows(const Tensor& x);

// Centered boxcar of (2*radius+1) taps down each column, edges replicated.
Tensor moving_average_rows(const Tensor& x, std::size_t radius);

// Clamp values to [lo, hi]; gradient passes through unclamped elements.
Tensor clamp(const Tensor& x, double lo, double hi);

// Operation with a caller-supplied backward pass. `backward` receives the
// output node (with grad populated) and must accumulate into the inputs'
// grad buffers, which are already allocated for inputs that require grad.
Tensor custom_op(const char* name, std::vector<Tensor> inputs, Shape out_shape,
                 std::vector<double> out_values,
                 std::function<void(Node&)> backward);

// --- Backward ----------------------------------------------------------

// Reverse sweep from a scalar loss. Gradients of every reachable node that
// requires grad are accumulated (call zero_grad on parameters between
// steps). Deterministic: the same graph yields bit-identical gradients.
void backward(const Tensor& loss);

}  // namespace hnsf::ad

#endif  // HNSF_TENSOR_HPP_
