#pragma once

#include <cstdint>
#include <span>

#include "uamtfl/tensor.hpp"

namespace uamtfl {

// Elementwise arithmetic. Operands must share a shape, except that either
// side may be a scalar, which broadcasts.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_const(const Tensor& a, double c);
Tensor mul_const(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor exp_elem(const Tensor& a);

/// out[n,h] = sum_d x[n,d] * w[d,h]
Tensor matmul(const Tensor& x, const Tensor& w);

/// out[n,h] = sum_d x[n,d] * w[d,h] + b[h]
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

/// Elementwise max(0, x). Subgradient at exactly 0 is 0.
Tensor relu(const Tensor& x);

/// Row-wise softmax with max-subtraction; accepts a rank-1 tensor as a
/// single row. Each output row sums to 1.
Tensor softmax_rows(const Tensor& logits);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// sum(x_i^2) / numel(x)
Tensor mean_square(const Tensor& x);

/// sum |x_i|, subgradient 0 at 0.
Tensor l1(const Tensor& x);

/// sum_t w[t] * sum_h |a[t,h]| for a rank-2 tensor; the weights are
/// constants (no gradient flows into them).
Tensor weighted_row_l1(const Tensor& a, std::span<const double> row_weights);

/// Mean cross entropy of rank-2 logits against integer labels, computed
/// with a stable log-sum-exp. Rows with mask==0 are excluded; an empty
/// mask means all rows are valid. Throws DataError for labels outside
/// [0, K) and ContractError when no row is valid.
Tensor cross_entropy_mean(const Tensor& logits, std::span<const int> labels,
                          std::span<const std::uint8_t> mask = {});

/// Mean squared residual over valid entries. `pred` is rank-1 or Nx1.
/// Throws ContractError when no entry is valid.
Tensor masked_mse(const Tensor& pred, std::span<const double> target,
                  std::span<const std::uint8_t> mask = {});

/// Expands a single-logit column z (Nx1 or rank-1) into two-class logits
/// [0, z]: column 0 is the fixed negative-class logit, column 1 the
/// positive-class logit.
Tensor binary_logits(const Tensor& z);

/// Concatenates T column vectors (each Nx1 or rank-1) into NxT.
Tensor concat_cols(std::span<const Tensor> cols);

/// Selects element `index` from a rank-1 tensor as a scalar.
Tensor element(const Tensor& v, std::size_t index);

}  // namespace uamtfl
