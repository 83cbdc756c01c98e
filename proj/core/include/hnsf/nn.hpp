// Named trainable parameters and the small layer zoo the models need.

#ifndef HNSF_NN_HPP_
#define HNSF_NN_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hnsf/tensor.hpp"

namespace hnsf::nn {

struct NamedParam {
  std::string name;
  ad::Tensor tensor;
};

// Registry of every trainable tensor in a model. Registration order is the
// construction order and stays fixed, which keeps initialization draws,
// optimizer sweeps and checkpoint layout deterministic.
class ParameterStore {
 public:
  ad::Tensor create(const std::string& name, ad::Shape shape,
                    std::mt19937_64& rng, double init_bound);
  ad::Tensor create_const(const std::string& name, ad::Shape shape,
                          double fill);

  const std::vector<NamedParam>& items() const { return params_; }
  std::vector<NamedParam>& items() { return params_; }
  ad::Tensor* find(const std::string& name);
  std::size_t total_size() const;

  void zero_grad();

 private:
  void register_param(const std::string& name, ad::Tensor t);
  std::vector<NamedParam> params_;
};

double uniform_init_bound(std::size_t fan_in);

// y = x * W + b with W (in x out), b (1 x out).
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, std::size_t in,
         std::size_t out, std::mt19937_64& rng);
  ad::Tensor forward(const ad::Tensor& x) const;

  ad::Tensor weight, bias;
};

// Length-preserving dilated conv over rows; weight (out, k, in).
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterStore& store, const std::string& prefix, std::size_t in,
         std::size_t out, std::size_t kernel, int dilation,
         std::mt19937_64& rng);
  ad::Tensor forward(const ad::Tensor& x) const;

  ad::Tensor weight, bias;
  int dilation = 1;
};

// One direction of a standard LSTM (input/forget/cell/output gates, tanh
// cell activation). Gate order in the packed weight matrices is [i, f, g, o];
// the forget-gate bias section is initialized to 1.
class LstmDirection {
 public:
  LstmDirection() = default;
  LstmDirection(ParameterStore& store, const std::string& prefix,
                std::size_t in, std::size_t hidden, std::mt19937_64& rng);
  // x: (T x in) -> (T x hidden)
  ad::Tensor forward(const ad::Tensor& x) const;

  ad::Tensor w_x, w_h, bias;
  std::size_t hidden = 0;
};

// Two independent directions, outputs concatenated: (T x in) -> (T x 2*hidden).
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParameterStore& store, const std::string& prefix, std::size_t in,
         std::size_t hidden_per_dir, std::mt19937_64& rng);
  ad::Tensor forward(const ad::Tensor& x) const;

  LstmDirection fwd, bwd;
};

}  // namespace hnsf::nn

#endif  // HNSF_NN_HPP_
