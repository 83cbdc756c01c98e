// Central finite-difference checks of the analytic gradients: the
// closed-form tap Jacobians, the full merge chain, and every primitive
// graph operation. Shared by the `gradcheck` CLI subcommand and the tests.

#ifndef HNSF_GRADCHECK_HPP_
#define HNSF_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hnsf/tensor.hpp"

namespace hnsf::gradcheck {

// |a - b| / max(|a|, |b|, floor)
double rel_error(double a, double b, double floor = 1e-6);

// Max over sampled coordinates of rel_error(analytic, central FD). `eval`
// must rebuild the forward pass from the current leaf values and return the
// scalar loss; `leaf` is perturbed in place. Checks every coordinate when
// max_coords == 0.
double check_tensor_grad(const std::function<double()>& eval, ad::Tensor leaf,
                         const std::vector<double>& analytic_grad, double eps,
                         std::size_t max_coords, std::mt19937_64& rng);

// d(tap)/d(fc) of both designs vs central differences of the design
// functions; returns the max error over taps (relative or absolute).
double tap_jacobian_rel_error(double fc, int filter_length, double eps);
double tap_jacobian_abs_error(double fc, int filter_length, double eps);

// Full chain: loss = sum_t y_t^2 over the time-variant merge of random
// signals with a random smooth cutoff trajectory; analytic dL/dfc vs FD
// perturbing individual fc_t. Max relative error over sampled positions.
double merge_chain_rel_error(std::size_t length, int filter_length, double eps,
                             std::uint64_t seed);

struct OpCheck {
  std::string op;
  double max_rel_error;
};

// Gradchecks every primitive operation at small random shapes.
std::vector<OpCheck> check_all_ops(std::uint64_t seed, double eps = 1e-5);

}  // namespace hnsf::gradcheck

#endif  // HNSF_GRADCHECK_HPP_
