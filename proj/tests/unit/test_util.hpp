#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vrgnn/ops.hpp"
#include "vrgnn/rng.hpp"
#include "vrgnn/tape.hpp"
#include "vrgnn/tensor.hpp"

namespace vrgnn::testing {

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Contracts a tensor to a scalar with fixed pseudo-random weights so every
/// output entry contributes a distinct amount.
inline ad::Var weighted_sum(ad::Var out, std::uint64_t seed = 99) {
  const Tensor w = random_tensor(out.value().shape(), seed, 0.5, 1.5);
  return ad::sum(ad::mul(out, out.tape->constant(w)));
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-6, std::abs(a) + std::abs(b));
}

/// Max relative error between tape gradients and central differences of
/// `f` over every entry of every input.
inline double gradcheck(const Builder& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
  ad::Var loss = f(tape, vars);
  tape.backward(loss);

  auto eval = [&](const std::vector<Tensor>& xs) {
    ad::Tape t;
    std::vector<ad::Var> vs;
    for (const auto& x : xs) vs.push_back(t.constant(x));
    return f(t, vs).value().item();
  };

  double worst = 0.0;
  std::vector<Tensor> xs = inputs;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor analytic = vars[k].grad();
    for (std::size_t e = 0; e < xs[k].size(); ++e) {
      const double orig = xs[k][e];
      xs[k][e] = orig + h;
      const double up = eval(xs);
      xs[k][e] = orig - h;
      const double down = eval(xs);
      xs[k][e] = orig;
      worst = std::max(worst, rel_error(analytic[e], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vrgnn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(VRGNN_FIXTURE_DIR) / name;
}

}  // namespace vrgnn::testing
