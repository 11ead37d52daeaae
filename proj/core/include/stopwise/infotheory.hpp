#pragma once

#include <cstddef>
#include <vector>

#include "stopwise/dataset.hpp"

namespace stopwise {

/// Joint count table over two discrete variables.
struct ContingencyCounts {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> joint;         // row-major counts
  std::vector<double> row_marginal;  // size rows
  std::vector<double> col_marginal;  // size cols
  double total = 0;

  double at(std::size_t r, std::size_t c) const { return joint[r * cols + c]; }

  static ContingencyCounts from_counts(std::size_t rows, std::size_t cols,
                                       std::vector<double> joint);
  static ContingencyCounts from_pairs(const std::vector<int>& x, const std::vector<int>& y,
                                      int x_levels, int y_levels);
};

/// Plug-in mutual information in nats, with 0 log 0 := 0.
double mutual_information(const ContingencyCounts& counts);

/// Shannon entropy (nats) of a vector of counts with the given total.
double entropy_from_counts(const std::vector<double>& counts, double total);

/// Expected plug-in MI of the table's marginals under the permutation
/// (hypergeometric) null model. Exposed for testing.
double expected_mutual_information(const ContingencyCounts& counts);

/// Adjusted mutual information: (MI - E[MI]) / (avg(H(x),H(y)) - E[MI]).
/// Conventions: either vector constant -> 0; 0/0 -> 0; x == y (non-constant) -> 1.
double adjusted_mutual_information(const std::vector<int>& x, const std::vector<int>& y);

/// Class-conditional mutual information: sum_c p(c) * MI(a, b | c), in nats.
double conditional_mutual_information(const std::vector<int>& a, const std::vector<int>& b,
                                      const std::vector<int>& cls);

struct FeatureFilterResult {
  std::vector<std::size_t> kept;  // feature columns, AMI descending (ties: lower id)
  std::vector<double> ami;        // per feature column, size n_features
  double eta = 1.0;               // final threshold used
};

/// Keep features whose AMI with the label clears a threshold that starts at 1
/// and halves until the kept set is non-empty. Below a 2^-20 floor, keeps all
/// features with positive AMI, or every feature if none is positive. Never
/// returns an empty set.
FeatureFilterResult filter_features(const QuantizedDataset& qds);

/// Same thresholding rule applied to precomputed per-feature scores.
FeatureFilterResult filter_features(std::vector<double> ami);

} // namespace stopwise
