#pragma once

#include <cstdint>
#include <vector>

#include "vrgnn/params.hpp"

namespace vrgnn {

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamOptions options;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const ParamStore& params, AdamOptions opts);
};

/// One bias-corrected Adam update. Weight decay enters as
/// grad += weight_decay * param for parameters flagged for decay.
void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace vrgnn
