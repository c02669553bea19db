#include "vrgnn/params.hpp"

#include <cmath>

#include "vrgnn/error.hpp"

namespace vrgnn {

std::size_t ParamStore::add(std::string name, Tensor value, bool decay) {
  if (contains(name)) throw Error("duplicate parameter name: " + name);
  params_.push_back({std::move(name), std::move(value), decay});
  return params_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw Error("unknown parameter: " + name);
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t({rows, cols});
  for (auto& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor normal_tensor(std::vector<std::size_t> shape, double mean, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.normal(mean, stddev);
  return t;
}

BoundParams::BoundParams(ad::Tape& tape, const ParamStore& store, bool requires_grad)
    : store_(&store) {
  vars_.reserve(store.size());
  for (const auto& p : store) vars_.push_back(tape.leaf(p.value, requires_grad));
}

std::vector<Tensor> BoundParams::gradients() const {
  std::vector<Tensor> grads;
  grads.reserve(vars_.size());
  for (const auto& v : vars_) grads.push_back(v.grad());
  return grads;
}

}  // namespace vrgnn
