#include "uamtfl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uamtfl/errors.hpp"

namespace uamtfl {

void RegularizerConfig::validate() const {
  auto check = [](const char* field, double v) {
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream os;
      os << "regularizer." << field << ": must be finite and non-negative, got " << v;
      throw ConfigError(os.str());
    }
  };
  check("alpha", alpha);
  check("beta", beta);
  check("lambda_l1", lambda_l1);
}

UncertaintyState::UncertaintyState(std::size_t task_count)
    : s_(Tensor::zeros({task_count})), trainable_(true) {
  if (task_count == 0) throw ConfigError("uncertainty state: task count must be >= 1");
}

UncertaintyState::UncertaintyState(std::vector<double> log_variance, bool trainable)
    : trainable_(trainable) {
  if (log_variance.empty()) {
    throw ConfigError("uncertainty state: task count must be >= 1");
  }
  for (std::size_t t = 0; t < log_variance.size(); ++t) {
    if (!std::isfinite(log_variance[t]) || std::abs(log_variance[t]) > kLogVarianceBound) {
      std::ostringstream os;
      os << "uncertainty state: log variance " << log_variance[t] << " for task " << t
         << " outside [-" << kLogVarianceBound << ", " << kLogVarianceBound << "]";
      throw ConfigError(os.str());
    }
  }
  s_ = Tensor::from_data({log_variance.size()}, std::move(log_variance));
}

std::size_t UncertaintyState::task_count() const { return s_.defined() ? s_.numel() : 0; }

Tensor UncertaintyState::task_log_variance(std::size_t task) const {
  return element(s_, task);
}

double UncertaintyState::log_variance_at(std::size_t task) const { return s_.at(task); }

std::vector<double> UncertaintyState::variances() const {
  std::vector<double> out(task_count());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = std::exp(s_.at(t));
  return out;
}

void UncertaintyState::clamp(double bound) {
  auto data = s_.mutable_data();
  for (double& v : data) v = std::clamp(v, -bound, bound);
}

Tensor scaled_softmax_likelihood(const Tensor& logits, const Tensor& log_variance,
                                 int task_index) {
  try {
    Tensor scale = exp_elem(neg(log_variance));  // 1/sigma^2
    return softmax_rows(mul(logits, scale));
  } catch (const NumericError& e) {
    std::ostringstream os;
    os << "scaled_softmax_likelihood";
    if (task_index >= 0) os << " (task " << task_index << ")";
    os << ": " << e.what();
    throw NumericError(os.str());
  }
}

Tensor classification_uncertainty_loss(const Tensor& logits, std::span<const int> labels,
                                       const Tensor& log_variance,
                                       std::span<const std::uint8_t> mask) {
  Tensor ce = cross_entropy_mean(logits, labels, mask);
  Tensor precision = exp_elem(neg(log_variance));
  return add(mul(precision, ce), mul_const(log_variance, 0.5));
}

std::optional<Tensor> regression_uncertainty_loss(const Tensor& predictions,
                                                  std::span<const double> targets,
                                                  const Tensor& log_variance,
                                                  std::span<const std::uint8_t> mask) {
  if (!mask.empty()) {
    bool any = false;
    for (std::uint8_t m : mask) {
      if (m) {
        any = true;
        break;
      }
    }
    if (!any) return std::nullopt;  // task skipped, not an error
  }
  Tensor mse = masked_mse(predictions, targets, mask);
  Tensor precision = exp_elem(neg(log_variance));
  return add(mul_const(mul(precision, mse), 0.5), mul_const(log_variance, 0.5));
}

Tensor l1_penalty(const Tensor& weights) { return l1(weights); }

Tensor asymmetric_feedback_regularizer(const Tensor& z, const Tensor& task_outputs,
                                       const Tensor& feedback,
                                       std::span<const double> task_weights,
                                       const RegularizerConfig& cfg) {
  const std::size_t n = z.rows(), h = z.cols(), t = task_outputs.cols();
  if (z.rank() != 2 || task_outputs.rank() != 2 || feedback.rank() != 2 ||
      task_outputs.rows() != n || feedback.rows() != t || feedback.cols() != h) {
    std::ostringstream os;
    os << "asymmetric_feedback_regularizer: Z " << shape_str(z.shape()) << ", O "
       << shape_str(task_outputs.shape()) << ", A " << shape_str(feedback.shape())
       << " do not agree";
    throw DimensionError(os.str());
  }
  if (task_weights.size() != t) {
    throw DimensionError("asymmetric_feedback_regularizer: " +
                         std::to_string(task_weights.size()) + " weights for " +
                         std::to_string(t) + " tasks");
  }
  for (std::size_t i = 0; i < task_weights.size(); ++i) {
    if (!std::isfinite(task_weights[i]) || task_weights[i] < 0.0) {
      throw ContractError("asymmetric_feedback_regularizer: weight for task " +
                          std::to_string(i) + " must be finite and non-negative");
    }
  }
  Tensor reconstruction = mean_square(sub(z, relu(matmul(task_outputs, feedback))));
  Tensor sparsity = weighted_row_l1(feedback, task_weights);
  return add(mul_const(reconstruction, cfg.beta), mul_const(sparsity, cfg.alpha));
}

std::vector<double> transfer_weights_from_loss(std::span<const double> per_task_losses) {
  for (std::size_t t = 0; t < per_task_losses.size(); ++t) {
    const double v = per_task_losses[t];
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream os;
      os << "transfer_weights_from_loss: loss " << v << " for task " << t
         << " must be finite and non-negative";
      throw ContractError(os.str());
    }
  }
  return {per_task_losses.begin(), per_task_losses.end()};
}

std::vector<double> transfer_weights_from_uncertainty(const UncertaintyState& u) {
  return u.variances();
}

}  // namespace uamtfl
