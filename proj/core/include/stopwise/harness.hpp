#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stopwise/model_io.hpp"
#include "stopwise/runtime.hpp"

namespace stopwise {

struct TrainConfig {
  int bins = 4;
  BinningRule binning = BinningRule::Width;
  double cost_e = 0.01;                    // scalar evaluation cost
  std::vector<double> cost_e_per_feature;  // optional per-column override
  std::vector<double> cost_q;              // optional L x L row-major; empty = 0-1
  StructureKind structure = StructureKind::Tree;
  std::size_t beta = 100;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

struct TrainTimings {
  double preprocess_s = 0; // quantize, filter, structure, tables
  double train_s = 0;      // belief sampling and backward sweep
};

/// Full offline pipeline: quantize, filter features, build the structure,
/// derive the ordering, estimate tables, and solve for the stage policy.
PolicyModel train_model(const LabeledDataset& train, const TrainConfig& cfg,
                        TrainTimings* timings = nullptr);

struct EvalReport {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double avg_features = 0.0;
  double inference_s = 0.0;
};

/// Classify every test instance; predictions are compared on original label
/// values so train/test label maps need not coincide. With missing_pct > 0 a
/// seeded random share of each instance's features is hidden from the model.
EvalReport evaluate(const PolicyModel& m, const LabeledDataset& test, double missing_pct = 0.0,
                    std::uint64_t seed = 0);

/// Seeded per-instance choice of hidden columns for a missing-value rate.
std::vector<std::size_t> missing_columns(std::size_t n_features, double missing_pct,
                                         std::uint64_t seed, std::size_t row);

enum class ExperimentKind { Single, BinSweep, CostSweep, StructureCompare, MissingRobustness };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Single;
  std::string data;            // training/CV dataset path
  DataFormat format = DataFormat::DenseCsv;
  std::string test_data;       // optional holdout; empty = k-fold CV on `data`
  int folds = 5;
  std::uint64_t seed = 0;
  std::size_t beta = 100;
  BinningRule binning = BinningRule::Width;
  // Grid axes; the kind fills its main axis with defaults when left empty.
  std::vector<int> bins_grid;
  std::vector<double> cost_e_grid;
  std::vector<StructureKind> structure_grid;
  std::vector<double> missing_grid; // percentages
};

/// Read a spec from a JSON file; unknown keys are rejected.
ExperimentSpec load_experiment_spec(const std::string& path);

struct ExperimentRow {
  int grid_index = 0;
  int fold = 0;
  int bins = 0;
  double cost_e = 0;
  StructureKind structure = StructureKind::Tree;
  double missing_pct = 0;
  std::size_t n_train = 0, n_test = 0;
  std::size_t kept_features = 0, horizon = 0;
  EvalReport report;
  TrainTimings timings;
  std::string error; // non-empty = this row failed; metrics are void
};

/// One row per (grid point, fold); failures are recorded per row and the run
/// continues. Deterministic for a fixed ExperimentSpec seed (timings aside).
std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec);

/// CSV with a fixed header; no quoting needed (error text is sanitized).
void write_results_csv(const ExperimentSpec& spec, const std::vector<ExperimentRow>& rows,
                       std::ostream& out);

/// Parse a results CSV back into header + cells; throws on ragged rows or a
/// header that does not match the writer's schema.
std::vector<std::vector<std::string>> parse_results_csv(std::istream& in);

const char* structure_kind_name(StructureKind kind);
StructureKind structure_kind_from_name(const std::string& name);
const char* experiment_kind_name(ExperimentKind kind);
ExperimentKind experiment_kind_from_name(const std::string& name);

} // namespace stopwise
