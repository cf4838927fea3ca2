#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace uamtfl {

enum class TaskKind { kClassification, kRegression };

/// Plain row-major matrix used for dataset storage (no gradients).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
};

enum class SplitTag { kFull, kTrain, kTest };

/// Feature matrix plus per-task targets with a validity mask. A cell with
/// mask 0 is excluded from every loss and every metric. Datasets are
/// immutable after construction and freely shareable across workers.
struct TaskDataset {
  Matrix x;                        // N x D
  Matrix targets;                  // N x T
  std::vector<std::uint8_t> mask;  // N x T row-major, 1 = valid
  TaskKind kind = TaskKind::kRegression;
  SplitTag split = SplitTag::kFull;
  std::vector<std::string> task_names;  // may be empty
  std::string provenance;               // JSON text

  std::size_t sample_count() const { return x.rows; }
  std::size_t feature_dim() const { return x.cols; }
  std::size_t task_count() const { return targets.cols; }
  bool valid_at(std::size_t n, std::size_t t) const {
    return mask.empty() || mask[n * targets.cols + t] != 0;
  }
};

/// Multiclass dataset (digit images): features plus integer class labels.
struct LabeledDataset {
  Matrix x;
  std::vector<int> labels;
  int num_classes = 10;
};

/// Per-class training counts, monotone non-increasing from class 0 up.
struct ImbalanceSchedule {
  std::vector<std::size_t> counts;
  std::uint64_t seed = 0;

  /// counts follow the recurrence c_0 = base, c_{k+1} = round(ratio * c_k).
  static ImbalanceSchedule geometric(std::size_t base, double ratio, std::size_t classes,
                                     std::uint64_t seed);
  void validate() const;
};

/// Draws exactly counts[k] training examples of class k without
/// replacement, deterministically per seed, and binarizes the result into
/// one task per class (target 1 = "is class k").
TaskDataset sample_imbalanced(const LabeledDataset& source, const ImbalanceSchedule& sched);

/// Binarizes a multiclass dataset into one task per class without any
/// subsampling (used for test splits, which stay balanced and untouched).
TaskDataset binarize_digits(const LabeledDataset& source, SplitTag split);

struct SyntheticMtlSpec {
  std::size_t task_count = 12;
  std::size_t feature_dim = 64;
  std::size_t latent_dim = 8;
  /// Latent coordinates reserved for outlier tasks; related tasks draw
  /// their weights from the remaining latent_dim - outlier_latent_dim
  /// coordinates, so outlier weights are orthogonal to the related span.
  std::size_t outlier_latent_dim = 3;
  std::size_t samples = 600;
  std::vector<double> noise;  // per-task residual stddev, length task_count
  std::vector<std::size_t> outlier_tasks;
  double related_signal = 1.0;  // ||v_t|| for related tasks
  double outlier_signal = 0.5;  // ||v_t|| for outlier tasks
  std::uint64_t seed = 0;

  void validate() const;
};

/// Shared-latent linear generator: X ~ N(0, I), latent U = X P for a
/// random column-orthonormal projection P, target_t = U v_t + noise.
/// Ground-truth weights P v_t and per-task noise are stored in the
/// dataset provenance.
TaskDataset generate_synthetic_mtl(const SyntheticMtlSpec& spec);

struct SyntheticDigitsSpec {
  std::size_t feature_dim = 64;
  double margin = 3.0;  // prototype norm; larger = easier classes
  double noise = 1.0;   // isotropic within-class stddev
  std::size_t train_per_class = 250;
  std::size_t test_per_class = 100;
  std::uint64_t seed = 0;
};

struct DigitsData {
  LabeledDataset train_pool;
  LabeledDataset test;
  std::string provenance;  // JSON text
};

/// Ten-class Gaussian prototype surrogate standing in for digit images
/// when no IDX files are supplied.
DigitsData generate_synthetic_digits(const SyntheticDigitsSpec& spec);

/// Reads an IDX image/label pair (big-endian magics 0x00000803 and
/// 0x00000801). Pixels are scaled to [0, 1]; labels must lie in 0-9.
LabeledDataset read_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

/// Loads a feature CSV and a target CSV joined on the first (identifier)
/// column. Rows follow the feature file order; blank target cells become
/// mask 0. Duplicate or orphan identifiers raise AlignmentError.
TaskDataset load_expression_csv(const std::filesystem::path& features_path,
                                const std::filesystem::path& targets_path);

/// Library-size correction to the median row sum, log(1+x), then
/// per-column standardization (constant columns map to all zeros).
Matrix preprocess_expression(const Matrix& raw_counts);

/// Step 3 of preprocess_expression alone: per-column mean 0, variance 1.
Matrix standardize_columns(const Matrix& m);

/// Seeded disjoint train/test split; selected row indices are sorted so
/// each split preserves the source row order.
std::pair<TaskDataset, TaskDataset> split_dataset(const TaskDataset& ds,
                                                  double train_fraction,
                                                  std::uint64_t seed);

}  // namespace uamtfl
