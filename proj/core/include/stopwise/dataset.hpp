#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace stopwise {

enum class DataFormat { DenseCsv, SparseIndexValue };

/// In-memory labeled dataset with real-valued features.
/// Classes are remapped to 0..n_classes-1 by ascending original label value;
/// label_values[c] recovers the original label for class c.
struct LabeledDataset {
  std::size_t n_instances = 0;
  std::size_t n_features = 0;
  int n_classes = 0;
  std::vector<int> labels;              // per instance, 0..n_classes-1
  std::vector<double> values;           // row-major [n_instances][n_features]
  std::vector<std::string> feature_ids; // column names
  std::vector<double> label_values;     // class -> original label

  double at(std::size_t i, std::size_t j) const { return values[i * n_features + j]; }
};

/// Load a dataset from disk.
/// DenseCsv: header row naming columns, one of which is `label`.
/// SparseIndexValue: per line `label idx:val ...` with 1-based indices;
/// unspecified entries are 0.
/// Throws std::runtime_error with a line number on malformed input.
LabeledDataset load_dataset(const std::string& path, DataFormat format);

/// How interior cut points are placed when fitting a quantizer.
/// Width: bins-1 equally spaced cuts across the training min-max range.
/// Frequency: cuts at the i/bins order statistics of the training values,
/// deduplicated, so bins hold roughly equal numbers of training values.
/// Heavily tied features then yield fewer effective cuts (possibly none).
enum class BinningRule { Width, Frequency };

/// Per-feature quantizer fitted on training data only.
struct Quantizer {
  struct FeatureCuts {
    std::vector<double> cuts; // strictly ascending interior cut points
    bool degenerate = false;  // no usable cuts; everything maps to bin 0
  };
  int bins = 0;
  std::vector<FeatureCuts> features;

  /// Map a raw value to a bin in [0, bins). Values below the training range
  /// clamp to 0, above to bins-1; a value exactly on a cut goes to the upper bin.
  int quantize(std::size_t feature, double value) const;
};

Quantizer fit_quantizer(const LabeledDataset& train, int bins,
                        BinningRule rule = BinningRule::Width);

/// Dataset after quantization: every feature takes values in [0, bins).
struct QuantizedDataset {
  std::size_t n_instances = 0;
  std::size_t n_features = 0;
  int n_classes = 0;
  int bins = 0;
  std::vector<int> labels;
  std::vector<std::int32_t> cells; // row-major bins
  std::vector<std::string> feature_ids;
  std::vector<double> label_values;

  int at(std::size_t i, std::size_t j) const { return cells[i * n_features + j]; }
};

QuantizedDataset quantize_dataset(const LabeledDataset& ds, const Quantizer& q);

/// Take the rows at `indices` (in order) as a new dataset.
LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& indices);

struct FoldSplit {
  std::vector<std::size_t> train; // ascending
  std::vector<std::size_t> test;  // ascending
};

/// Deterministic k-fold partition of [0, n): folds are disjoint, cover all
/// rows, and differ in size by at most one. Requires 2 <= folds <= n.
std::vector<FoldSplit> kfold_split(std::size_t n, int folds, std::uint64_t seed);

} // namespace stopwise
