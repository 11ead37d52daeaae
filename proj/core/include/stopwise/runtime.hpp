#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stopwise/belief.hpp"
#include "stopwise/dataset.hpp"
#include "stopwise/policy.hpp"
#include "stopwise/structure.hpp"

namespace stopwise {

/// Everything needed to classify instances: immutable after training.
struct PolicyModel {
  int format_version = 1;
  Quantizer quantizer;
  std::vector<std::string> feature_ids; // full input schema, by global column
  std::vector<double> label_values;     // class index -> original label
  DependencyStructure structure;
  FeatureOrdering ordering;
  std::vector<MarginalTable> tables;
  Belief priors;
  CostModel costs;
  StagePolicy policy;
};

struct TraceStep {
  std::size_t feature = 0; // global column
  int bin = -1;            // observed bin, or -1 when the value was missing
  Belief posterior;        // belief after this step
};

struct Decision {
  int predicted = 0;            // class index into label_values
  int features_used = 0;        // features requested, missing ones included
  double evaluation_cost = 0.0; // sum of per-stage costs actually paid
  std::vector<TraceStep> trace; // one entry per requested feature
};

/// Pull-model feature source: return the raw value, or nullopt when the
/// feature is unavailable for this instance.
using FeatureAccessor = std::function<std::optional<double>(std::size_t feature)>;

/// Sequential classification of one instance: at each stage consult the
/// stage's alpha vectors (stopping wins ties); on Continue request the next
/// ordered feature, quantize it, and fold its likelihood into the belief.
/// Missing values leave the belief unchanged but still advance the stage and
/// count toward features_used; a missing ancestor downgrades later stages to
/// their class-only likelihood columns.
Decision classify_instance(const PolicyModel& m, const FeatureAccessor& accessor);

/// Accessor serving one dataset row.
FeatureAccessor row_accessor(const LabeledDataset& ds, std::size_t row);

/// Accessor serving one dataset row with `missing` columns hidden.
FeatureAccessor masked_row_accessor(const LabeledDataset& ds, std::size_t row,
                                    std::vector<std::size_t> missing);

} // namespace stopwise
