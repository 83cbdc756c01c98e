#ifndef HNSF_OPTIM_HPP_
#define HNSF_OPTIM_HPP_

#include <cstdint>
#include <vector>

#include "hnsf/nn.hpp"

namespace hnsf::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Scale all gradients so their global L2 norm does not exceed max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(ParameterStore& params, double max_norm);

class Adam {
 public:
  Adam(ParameterStore& params, AdamConfig cfg);

  // One update from the current gradients. A non-finite gradient anywhere
  // skips the whole step, bumps skipped_steps() and warns on stderr.
  void step();

  std::int64_t step_count() const { return step_count_; }
  std::int64_t skipped_steps() const { return skipped_; }

  // Serialized state: first/second moments per parameter plus counters.
  std::vector<double>& moment1(std::size_t param_index) { return m_[param_index]; }
  std::vector<double>& moment2(std::size_t param_index) { return v_[param_index]; }
  void set_counters(std::int64_t steps, std::int64_t skipped);

 private:
  ParameterStore& params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t step_count_ = 0;
  std::int64_t skipped_ = 0;
};

}  // namespace hnsf::nn

#endif  // HNSF_OPTIM_HPP_
