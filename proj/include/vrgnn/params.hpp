#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vrgnn/rng.hpp"
#include "vrgnn/tape.hpp"
#include "vrgnn/tensor.hpp"

namespace vrgnn {

/// One named trainable array.
struct Parameter {
  std::string name;
  Tensor value;
  /// Whether weight decay applies (weights and embedding tables, not biases).
  bool decay = true;
};

/// Ordered collection of named parameters. Order is creation order and is
/// what checkpoints and optimizer state follow.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value, bool decay);
  std::size_t size() const { return params_.size(); }

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  /// Throws if absent.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;
  Parameter& get(const std::string& name) { return params_[index_of(name)]; }
  const Parameter& get(const std::string& name) const { return params_[index_of(name)]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

/// Glorot-uniform matrix [rows x cols].
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Tensor normal_tensor(std::vector<std::size_t> shape, double mean, double stddev, Rng& rng);

/// Parameters placed on a tape as gradient-requiring leaves.
class BoundParams {
 public:
  BoundParams(ad::Tape& tape, const ParamStore& store, bool requires_grad);

  ad::Var operator[](std::size_t i) const { return vars_[i]; }
  ad::Var get(const std::string& name) const { return vars_[store_->index_of(name)]; }
  const ParamStore& store() const { return *store_; }

  /// Gradients in store order, after tape.backward().
  std::vector<Tensor> gradients() const;

 private:
  const ParamStore* store_;
  std::vector<ad::Var> vars_;
};

}  // namespace vrgnn
