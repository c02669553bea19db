#pragma once

#include <cstddef>
#include <vector>

#include "vrgnn/rng.hpp"
#include "vrgnn/tape.hpp"

// Differentiable primitives. Each records one node on the tape of its first
// argument. Index vectors are copied into the node so they need not outlive
// the call.
namespace vrgnn::ad {

using Index = std::vector<std::size_t>;

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// a [n x m] plus bias b [m] on every row.
Var add_bias(Var a, Var bias);
Var scale(Var a, double c);
/// alpha * a + beta * b.
Var axpby(double alpha, Var a, double beta, Var b);
Var mul(Var a, Var b);

/// a [n x k] * b [k x m].
Var matmul(Var a, Var b);
/// a [n x k] * b^T for b [m x k]. This is the x W^T form of an affine layer.
Var matmul_nt(Var a, Var b);
/// x W^T + b, with W [out x in] and b [out].
Var linear(Var x, Var weight, Var bias);

Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);

Var sum(Var a);
Var mean(Var a);

/// [a | b] column-wise; both need the same row count.
Var concat_cols(Var a, Var b);
/// out[k] = a[index[k]] row-wise.
Var gather_rows(Var a, Index index);
/// out[index[k]] += a[k], out has `num_rows` rows. Accumulates in k order.
Var scatter_add_rows(Var a, Index index, std::size_t num_rows);
/// out[k] = <a[k], b[k]>, shape [n].
Var row_dot(Var a, Var b);
/// out[k] = w[k] * a[k], w of shape [n].
Var scale_rows(Var a, Var w);

/// Softmax over groups of entries that share a segment id.
Var segment_softmax(Var logits, Index segments, std::size_t num_segments);
/// Numerically stable log(sum(exp(row))) per row, shape [n].
Var log_sum_exp_rows(Var a);

/// Inverted dropout. Identity when rate == 0 or !train.
Var dropout(Var a, double rate, Rng& rng, bool train);

/// 1/2 sum (mu^2 + sigma^2 - 1 - ln sigma^2) over every entry.
/// KL(N(mu, diag sigma^2) || N(0, I)) summed over rows.
Var gaussian_kl(Var mu, Var sigma);

/// Mean over masked rows of -log softmax(logits)[label].
Var masked_cross_entropy(Var logits, const std::vector<int>& labels,
                         const std::vector<bool>& mask);

}  // namespace vrgnn::ad
