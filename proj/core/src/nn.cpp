#include "hnsf/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace hnsf::nn {

using ad::Shape;
using ad::Tensor;

void ParameterStore::register_param(const std::string& name, Tensor t) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  params_.push_back({name, std::move(t)});
}

Tensor ParameterStore::create(const std::string& name, Shape shape,
                              std::mt19937_64& rng, double init_bound) {
  const std::size_t n = ad::shape_numel(shape);
  std::vector<double> v(n);
  std::uniform_real_distribution<double> dist(-init_bound, init_bound);
  for (auto& x : v) x = dist(rng);
  Tensor t = Tensor::leaf(std::move(shape), std::move(v), /*requires_grad=*/true);
  register_param(name, t);
  return t;
}

Tensor ParameterStore::create_const(const std::string& name, Shape shape,
                                    double fill) {
  std::vector<double> v(ad::shape_numel(shape), fill);
  Tensor t = Tensor::leaf(std::move(shape), std::move(v), /*requires_grad=*/true);
  register_param(name, t);
  return t;
}

Tensor* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p.tensor;
  }
  return nullptr;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) {
    p.tensor.mutable_grad();  // allocate so optimizers always see a buffer
    p.tensor.zero_grad();
  }
}

double uniform_init_bound(std::size_t fan_in) {
  return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

Linear::Linear(ParameterStore& store, const std::string& prefix, std::size_t in,
               std::size_t out, std::mt19937_64& rng) {
  const double bound = uniform_init_bound(in);
  weight = store.create(prefix + ".w", {in, out}, rng, bound);
  bias = store.create(prefix + ".b", {1, out}, rng, bound);
}

Tensor Linear::forward(const Tensor& x) const {
  return ad::add(ad::matmul(x, weight), bias);
}

Conv1d::Conv1d(ParameterStore& store, const std::string& prefix, std::size_t in,
               std::size_t out, std::size_t kernel, int dil,
               std::mt19937_64& rng)
    : dilation(dil) {
  const double bound = uniform_init_bound(in * kernel);
  weight = store.create(prefix + ".w", {out, kernel, in}, rng, bound);
  bias = store.create(prefix + ".b", {out}, rng, bound);
}

Tensor Conv1d::forward(const Tensor& x) const {
  return ad::conv1d_dilated(x, weight, bias, dilation);
}

LstmDirection::LstmDirection(ParameterStore& store, const std::string& prefix,
                             std::size_t in, std::size_t h,
                             std::mt19937_64& rng)
    : hidden(h) {
  const double bound = uniform_init_bound(in + h);
  w_x = store.create(prefix + ".wx", {in, 4 * h}, rng, bound);
  w_h = store.create(prefix + ".wh", {h, 4 * h}, rng, bound);
  bias = store.create(prefix + ".b", {1, 4 * h}, rng, bound);
  // forget-gate section [h, 2h)
  auto& b = bias.mutable_values();
  for (std::size_t i = h; i < 2 * h; ++i) b[i] = 1.0;
}

Tensor LstmDirection::forward(const Tensor& x) const {
  const std::size_t T = x.rows();
  const std::size_t H = hidden;
  Tensor h = Tensor::zeros({1, H});
  Tensor c = Tensor::zeros({1, H});
  std::vector<Tensor> outputs;
  outputs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Tensor xt = ad::slice(x, t, 1, 0, x.cols());
    Tensor z = ad::add(ad::add(ad::matmul(xt, w_x), ad::matmul(h, w_h)), bias);
    Tensor i = ad::sigmoid(ad::slice(z, 0, 1, 0, H));
    Tensor f = ad::sigmoid(ad::slice(z, 0, 1, H, H));
    Tensor g = ad::tanh(ad::slice(z, 0, 1, 2 * H, H));
    Tensor o = ad::sigmoid(ad::slice(z, 0, 1, 3 * H, H));
    c = ad::add(ad::mul(f, c), ad::mul(i, g));
    h = ad::mul(o, ad::tanh(c));
    outputs.push_back(h);
  }
  return ad::concat(outputs, 0);
}

BiLstm::BiLstm(ParameterStore& store, const std::string& prefix, std::size_t in,
               std::size_t hidden_per_dir, std::mt19937_64& rng)
    : fwd(store, prefix + ".fwd", in, hidden_per_dir, rng),
      bwd(store, prefix + ".bwd", in, hidden_per_dir, rng) {}

Tensor BiLstm::forward(const Tensor& x) const {
  Tensor f = fwd.forward(x);
  Tensor b = ad::reverse_rows(bwd.forward(ad::reverse_rows(x)));
  return ad::concat({f, b}, 1);
}

}  // namespace hnsf::nn
