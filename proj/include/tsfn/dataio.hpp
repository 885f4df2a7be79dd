#pragma once
// CSV ingestion, dataset serialization, and the variance-explained PCA
// analysis relating data correlation rank to Hessian outlier counts.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsfn/matrix.hpp"
#include "tsfn/objectives.hpp"

namespace tsfn::dataio {

// Feature matrix, one row per sample, plus optional regression targets.
struct Dataset {
  Matrix features;                // n_samples x dim
  std::optional<Matrix> targets;  // n_samples x 1 when present

  std::size_t n_samples() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
};

// Parses a delimited numeric file with locale-independent dot-decimal
// cells. When target_column is set that column becomes the target vector
// and the remaining columns the features. Throws std::runtime_error
// carrying the 1-based line number on ragged rows, non-numeric cells, or
// non-finite values; std::invalid_argument for a target column outside the
// file's width.
Dataset load_csv(const std::string& path, bool has_header,
                 std::optional<std::size_t> target_column = std::nullopt,
                 char delimiter = ',');

// Writes the features with the target column, if any, appended last, at
// round-trip precision. Throws std::runtime_error when the file cannot be
// opened.
void save_csv(const std::string& path, const Dataset& ds,
              char delimiter = ',');

struct VarianceExplained {
  std::vector<double> eigenvalues;  // covariance eigenvalues, descending
  std::vector<double> cumulative;   // cumulative proportion of variance
  std::size_t n90 = 0;              // smallest count reaching >= 0.90
  bool degenerate = false;          // zero-variance data, n90 forced to 0
};

// Eigenvalues of the centered sample covariance (Gram / (n-1)) and the
// cumulative proportion curve. Requires n_samples >= 2.
VarianceExplained variance_explained(const Dataset& ds);

struct OutlierReport {
  std::size_t n90 = 0;
  std::size_t n_outliers = 0;
  long long difference = 0;  // n_outliers - n90
  std::vector<std::size_t> widths;
  std::uint64_t seed = 0;
  VarianceExplained pca;
  std::vector<double> hessian_eigenvalues;  // descending
};

// Trains an MLP on the dataset with 200 fixed gradient-descent steps and
// takes the Hessian spectrum at the trained point. Eigenvalues above a
// bulk edge fitted at aspect ratio n_params / n_samples count as outliers
// only when a factor-1.8 spectral gap separates them from the rest; the
// count is compared with the PCA n90. mlp_widths is the full layer chain,
// so its first entry must equal ds.dim and its last the target width; the
// dataset must carry targets.
OutlierReport outlier_vs_pca_report(const Dataset& ds,
                                    const std::vector<std::size_t>& mlp_widths,
                                    std::uint64_t seed);

// Adopts generated synthetic regression data as a Dataset.
Dataset from_objective_data(obj::Dataset data);

}  // namespace tsfn::dataio
