#include "hnsf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hnsf/nn.hpp"
#include "hnsf/sinc_filter.hpp"

namespace hnsf::gradcheck {

double rel_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double check_tensor_grad(const std::function<double()>& eval, ad::Tensor leaf,
                         const std::vector<double>& analytic_grad, double eps,
                         std::size_t max_coords, std::mt19937_64& rng) {
  auto& vals = leaf.mutable_values();
  std::vector<std::size_t> coords(vals.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (max_coords > 0 && coords.size() > max_coords) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }
  double worst = 0.0;
  for (std::size_t i : coords) {
    const double orig = vals[i];
    const double h = eps * std::max(1.0, std::abs(orig));
    vals[i] = orig + h;
    const double fp = eval();
    vals[i] = orig - h;
    const double fm = eval();
    vals[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    worst = std::max(worst, rel_error(analytic_grad[i], numeric));
  }
  return worst;
}

namespace {

double tap_jacobian_error(double fc, int M, double eps, bool relative) {
  const auto jac = sinc::tap_jacobian(fc, M);
  const auto lp_p = sinc::design_lowpass(fc + eps, M);
  const auto lp_m = sinc::design_lowpass(fc - eps, M);
  const auto hp_p = sinc::design_highpass(fc + eps, M);
  const auto hp_m = sinc::design_highpass(fc - eps, M);
  double worst = 0.0;
  for (int m = 0; m < M; ++m) {
    const double fd_low = (lp_p[m] - lp_m[m]) / (2.0 * eps);
    const double fd_high = (hp_p[m] - hp_m[m]) / (2.0 * eps);
    if (relative) {
      worst = std::max(worst, rel_error(jac.dlow[m], fd_low, 1.0));
      worst = std::max(worst, rel_error(jac.dhigh[m], fd_high, 1.0));
    } else {
      worst = std::max(worst, std::abs(jac.dlow[m] - fd_low));
      worst = std::max(worst, std::abs(jac.dhigh[m] - fd_high));
    }
  }
  return worst;
}

}  // namespace

double tap_jacobian_rel_error(double fc, int filter_length, double eps) {
  return tap_jacobian_error(fc, filter_length, eps, true);
}

double tap_jacobian_abs_error(double fc, int filter_length, double eps) {
  return tap_jacobian_error(fc, filter_length, eps, false);
}

double merge_chain_rel_error(std::size_t length, int filter_length, double eps,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> harmonic(length), noise(length), fc(length);
  const double ph = phase(rng);
  for (std::size_t t = 0; t < length; ++t) {
    harmonic[t] = amp(rng);
    noise[t] = amp(rng);
    fc[t] = 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi *
                                     static_cast<double>(t) / 173.0 + ph);
  }

  auto loss_of = [&](const std::vector<double>& cutoffs) {
    const auto y = sinc::merge_waveforms(harmonic, noise, cutoffs, filter_length);
    double acc = 0.0;
    for (double v : y) acc += v * v;
    return acc;
  };

  const auto y = sinc::merge_waveforms(harmonic, noise, fc, filter_length);
  std::vector<double> dL_dy(length);
  for (std::size_t t = 0; t < length; ++t) dL_dy[t] = 2.0 * y[t];
  const auto analytic =
      sinc::merge_backward_fc(dL_dy, harmonic, noise, fc, filter_length);

  // boundary rows plus a random sample of interior positions
  std::vector<std::size_t> positions = {0, 1,
                                        static_cast<std::size_t>(filter_length - 1),
                                        static_cast<std::size_t>(filter_length),
                                        length - 1};
  std::uniform_int_distribution<std::size_t> pos_dist(0, length - 1);
  for (int i = 0; i < 40; ++i) positions.push_back(pos_dist(rng));

  double worst = 0.0;
  std::vector<double> probe = fc;
  for (std::size_t t : positions) {
    const double orig = probe[t];
    probe[t] = orig + eps;
    const double fp = loss_of(probe);
    probe[t] = orig - eps;
    const double fm = loss_of(probe);
    probe[t] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    worst = std::max(worst, rel_error(analytic[t], numeric, 1.0));
  }
  return worst;
}

namespace {

ad::Tensor random_leaf(ad::Shape shape, std::mt19937_64& rng, double lo,
                       double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return ad::Tensor::leaf(std::move(shape), std::move(v), true);
}

// loss = sum(out * C) with random O(1) coefficients, so every output
// element contributes a generic gradient.
ad::Tensor weighted_sum(const ad::Tensor& out, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> c(out.size());
  for (auto& x : c) x = dist(rng);
  return ad::sum(ad::mul(out, ad::Tensor::leaf(out.shape(), std::move(c))));
}

double check_op(const std::function<ad::Tensor(const std::vector<ad::Tensor>&)>& build,
                std::vector<ad::Tensor> leaves, double eps,
                std::mt19937_64& rng) {
  auto eval = [&]() {
    std::mt19937_64 r(12345);
    return weighted_sum(build(leaves), r).scalar_value();
  };
  std::mt19937_64 r0(12345);
  ad::Tensor loss = weighted_sum(build(leaves), r0);
  for (auto& l : leaves) {
    l.mutable_grad();
    l.zero_grad();
  }
  ad::backward(loss);
  double worst = 0.0;
  for (auto& l : leaves) {
    std::vector<double> g(l.grad().begin(), l.grad().end());
    worst = std::max(worst, check_tensor_grad(eval, l, g, eps, 24, rng));
  }
  return worst;
}

}  // namespace

std::vector<OpCheck> check_all_ops(std::uint64_t seed, double eps) {
  std::mt19937_64 rng(seed);
  std::vector<OpCheck> results;
  auto run = [&](const std::string& name,
                 const std::function<ad::Tensor(const std::vector<ad::Tensor>&)>& build,
                 std::vector<ad::Tensor> leaves) {
    results.push_back({name, check_op(build, std::move(leaves), eps, rng)});
  };
  // random small shapes, drawn fresh per op
  std::uniform_int_distribution<std::size_t> dim(2, 6);
  const std::size_t r = dim(rng), c = dim(rng), k = dim(rng);

  run("add",
      [](const std::vector<ad::Tensor>& v) { return ad::add(v[0], v[1]); },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({r, c}, rng, -1, 1)});
  run("add_bias",
      [](const std::vector<ad::Tensor>& v) { return ad::add(v[0], v[1]); },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({1, c}, rng, -1, 1)});
  run("add_scalar",
      [](const std::vector<ad::Tensor>& v) { return ad::add(v[0], v[1]); },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({1, 1}, rng, -1, 1)});
  run("sub",
      [](const std::vector<ad::Tensor>& v) { return ad::sub(v[0], v[1]); },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({r, c}, rng, -1, 1)});
  run("mul",
      [](const std::vector<ad::Tensor>& v) { return ad::mul(v[0], v[1]); },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({r, c}, rng, -1, 1)});
  run("mul_scalar",
      [](const std::vector<ad::Tensor>& v) { return ad::mul(v[0], v[1]); },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({1, 1}, rng, -1, 1)});
  run("scale",
      [](const std::vector<ad::Tensor>& v) { return ad::scale(v[0], -0.7); },
      {random_leaf({r, c}, rng, -1, 1)});
  run("matmul",
      [](const std::vector<ad::Tensor>& v) { return ad::matmul(v[0], v[1]); },
      {random_leaf({r, k}, rng, -1, 1), random_leaf({k, c}, rng, -1, 1)});
  run("tanh",
      [](const std::vector<ad::Tensor>& v) { return ad::tanh(v[0]); },
      {random_leaf({r, c}, rng, -2, 2)});
  run("sigmoid",
      [](const std::vector<ad::Tensor>& v) { return ad::sigmoid(v[0]); },
      {random_leaf({r, c}, rng, -2, 2)});
  run("square",
      [](const std::vector<ad::Tensor>& v) { return ad::square(v[0]); },
      {random_leaf({r, c}, rng, -2, 2)});
  run("log",
      [](const std::vector<ad::Tensor>& v) { return ad::log(v[0]); },
      {random_leaf({r, c}, rng, 0.5, 2.0)});
  run("sum",
      [](const std::vector<ad::Tensor>& v) { return ad::sum(v[0]); },
      {random_leaf({r, c}, rng, -1, 1)});
  run("mean",
      [](const std::vector<ad::Tensor>& v) { return ad::mean(v[0]); },
      {random_leaf({r, c}, rng, -1, 1)});
  run("slice",
      [r, c](const std::vector<ad::Tensor>& v) {
        return ad::slice(v[0], 1, r - 1, 1, c - 1);
      },
      {random_leaf({r, c}, rng, -1, 1)});
  run("concat_rows",
      [](const std::vector<ad::Tensor>& v) {
        return ad::concat({v[0], v[1]}, 0);
      },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({k, c}, rng, -1, 1)});
  run("concat_cols",
      [](const std::vector<ad::Tensor>& v) {
        return ad::concat({v[0], v[1]}, 1);
      },
      {random_leaf({r, c}, rng, -1, 1), random_leaf({r, k}, rng, -1, 1)});
  run("conv1d",
      [](const std::vector<ad::Tensor>& v) {
        return ad::conv1d_dilated(v[0], v[1], v[2], 1);
      },
      {random_leaf({3 * r, c}, rng, -1, 1), random_leaf({k, 3, c}, rng, -1, 1),
       random_leaf({k}, rng, -1, 1)});
  run("conv1d_dilated",
      [](const std::vector<ad::Tensor>& v) {
        return ad::conv1d_dilated(v[0], v[1], v[2], 3);
      },
      {random_leaf({3 * r + 4, c}, rng, -1, 1),
       random_leaf({k, 3, c}, rng, -1, 1), random_leaf({k}, rng, -1, 1)});
  run("repeat_rows",
      [k](const std::vector<ad::Tensor>& v) { return ad::repeat_rows(v[0], k); },
      {random_leaf({r, c}, rng, -1, 1)});
  run("reverse_rows",
      [](const std::vector<ad::Tensor>& v) { return ad::reverse_rows(v[0]); },
      {random_leaf({r, c}, rng, -1, 1)});
  run("moving_average",
      [](const std::vector<ad::Tensor>& v) {
        return ad::moving_average_rows(v[0], 2);
      },
      {random_leaf({3 * r, 1}, rng, -1, 1)});
  run("clamp",
      [](const std::vector<ad::Tensor>& v) { return ad::clamp(v[0], -0.5, 0.5); },
      {random_leaf({r, c}, rng, -0.4, 0.4)});

  // composite bilstm over a short sequence, checking all six weight tensors
  {
    std::mt19937_64 init_rng(seed + 1);
    nn::ParameterStore store;
    nn::BiLstm bilstm(store, "gc.bilstm", 3, 2, init_rng);
    ad::Tensor x = random_leaf({4, 3}, rng, -1, 1);
    auto build = [&](const std::vector<ad::Tensor>&) {
      return bilstm.forward(x);
    };
    std::vector<ad::Tensor> leaves = {x};
    for (auto& p : store.items()) leaves.push_back(p.tensor);
    results.push_back({"bilstm", check_op(build, std::move(leaves), eps, rng)});
  }

  // sinc merge custom op, gradients to all three inputs
  {
    ad::Tensor h = random_leaf({64, 1}, rng, -1, 1);
    ad::Tensor a = random_leaf({64, 1}, rng, -1, 1);
    ad::Tensor f = random_leaf({64, 1}, rng, 0.25, 0.75);
    auto build = [](const std::vector<ad::Tensor>& v) {
      return sinc::merge_op(v[0], v[1], v[2], 15);
    };
    results.push_back(
        {"sinc_merge", check_op(build, {h, a, f}, eps, rng)});
  }

  return results;
}

}  // namespace hnsf::gradcheck
