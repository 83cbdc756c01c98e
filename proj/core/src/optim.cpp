#include "hnsf/optim.hpp"

#include <cmath>
#include <cstdio>

namespace hnsf::nn {

double clip_grad_norm(ParameterStore& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params.items()) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params.items()) {
      for (double& g : p.tensor.mutable_grad()) g *= s;
    }
  }
  return norm;
}

Adam::Adam(ParameterStore& params, AdamConfig cfg) : params_(params), cfg_(cfg) {
  m_.resize(params.items().size());
  v_.resize(params.items().size());
  for (std::size_t i = 0; i < params.items().size(); ++i) {
    const std::size_t n = params.items()[i].tensor.size();
    m_[i].assign(n, 0.0);
    v_[i].assign(n, 0.0);
  }
}

void Adam::step() {
  for (auto& p : params_.items()) {
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        ++skipped_;
        std::fprintf(stderr,
                     "[adam] non-finite gradient in '%s', step skipped "
                     "(%lld skipped so far)\n",
                     p.name.c_str(), static_cast<long long>(skipped_));
        return;
      }
    }
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.items().size(); ++i) {
    auto& t = params_.items()[i].tensor;
    auto& values = t.mutable_values();
    auto grads = t.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = j < grads.size() ? grads[j] : 0.0;
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      values[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::set_counters(std::int64_t steps, std::int64_t skipped) {
  step_count_ = steps;
  skipped_ = skipped;
}

}  // namespace hnsf::nn
