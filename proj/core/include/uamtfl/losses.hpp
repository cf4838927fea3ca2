#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uamtfl/ops.hpp"
#include "uamtfl/tensor.hpp"

namespace uamtfl {

/// Post-step clamp bound on each per-task log-variance.
inline constexpr double kLogVarianceBound = 10.0;

/// Coefficients of the asymmetric feedback objective. alpha scales the
/// per-task weighted L1 on the feedback matrix, beta the feature
/// reconstruction term, lambda_l1 the L1 on the shared layer weights.
struct RegularizerConfig {
  double alpha = 1e-3;
  double beta = 1e-2;
  double lambda_l1 = 1e-4;
  // Ablation switches for the uncertainty-weighted variant: whether the
  // learned variances weight the per-task data losses and/or the feedback
  // sparsity penalties.
  bool uncertainty_in_data = true;
  bool uncertainty_in_regularizer = true;

  void validate() const;  // throws ConfigError naming the offending field
};

/// Per-task learnable log-variance vector s, s_t = log(sigma_t^2).
/// Parametrizing the noise on the log scale keeps sigma^2 positive
/// without projections; the trainer clamps |s_t| <= kLogVarianceBound
/// after every optimizer step.
class UncertaintyState {
 public:
  UncertaintyState() = default;
  explicit UncertaintyState(std::size_t task_count);
  UncertaintyState(std::vector<double> log_variance, bool trainable);

  std::size_t task_count() const;
  Tensor& log_variance() { return s_; }
  const Tensor& log_variance() const { return s_; }
  /// Scalar graph view of s_t; gradients flow back into the vector.
  Tensor task_log_variance(std::size_t task) const;
  double log_variance_at(std::size_t task) const;
  /// sigma_t^2 = exp(s_t), detached.
  std::vector<double> variances() const;
  bool trainable() const { return trainable_; }
  void clamp(double bound = kLogVarianceBound);

 private:
  Tensor s_;
  bool trainable_ = true;
};

/// softmax over rows of logits scaled by 1/sigma^2 = exp(-s). The row
/// argmax is invariant under the scaling; as s grows the rows approach
/// the uniform distribution. `task_index`, when >= 0, is included in the
/// NumericError message if the scaled logits overflow.
Tensor scaled_softmax_likelihood(const Tensor& logits, const Tensor& log_variance,
                                 int task_index = -1);

/// exp(-s) * CE(logits, labels) + s/2 with CE the mean cross entropy on
/// the unscaled logits. Reduces to plain CE exactly at s = 0.
Tensor classification_uncertainty_loss(const Tensor& logits, std::span<const int> labels,
                                       const Tensor& log_variance,
                                       std::span<const std::uint8_t> mask = {});

/// (1/2) * exp(-s) * MSE + s/2 over valid entries. Reduces to MSE/2
/// exactly at s = 0. Returns nullopt when the mask selects no samples
/// (the task is skipped, not an error).
std::optional<Tensor> regression_uncertainty_loss(const Tensor& predictions,
                                                  std::span<const double> targets,
                                                  const Tensor& log_variance,
                                                  std::span<const std::uint8_t> mask = {});

/// Sum of absolute values; subgradient 0 at 0.
Tensor l1_penalty(const Tensor& weights);

/// beta * mean((Z - relu(O A))^2) + alpha * sum_t w_t ||a_t||_1.
///
/// Z [NxH] is the shared representation, O [NxT] the per-task outputs,
/// A [TxH] the task-to-feature feedback matrix. A larger weight on task
/// t shrinks its feedback row and with it the task's influence on the
/// shared features. The weights are constants: no gradient flows through
/// them.
Tensor asymmetric_feedback_regularizer(const Tensor& z, const Tensor& task_outputs,
                                       const Tensor& feedback,
                                       std::span<const double> task_weights,
                                       const RegularizerConfig& cfg);

/// Loss-guided transfer weights: w_t = current per-task loss, treated as
/// a constant. High-loss tasks get larger sparsity penalties and hence
/// less influence on the shared representation.
std::vector<double> transfer_weights_from_loss(std::span<const double> per_task_losses);

/// Uncertainty-guided transfer weights: w_t = sigma_t^2 = exp(s_t),
/// detached from the graph.
std::vector<double> transfer_weights_from_uncertainty(const UncertaintyState& u);

}  // namespace uamtfl
