#include "stopwise/runtime.hpp"

#include <algorithm>
#include <stdexcept>

namespace stopwise {

Decision classify_instance(const PolicyModel& m, const FeatureAccessor& accessor) {
  int horizon = m.policy.horizon();
  Belief b = m.priors;
  std::vector<int> ctx(horizon, -1); // observed bin per ordering position
  Decision d;

  int k = 0;
  while (true) {
    PolicyDecision pd = policy_argmin(m.policy, m.tables, k, ctx, b);
    if (k == horizon || pd.action != kContinueAction) break;

    std::size_t col = m.ordering.columns[k];
    std::optional<double> value;
    try {
      value = accessor(col);
    } catch (const std::exception& e) {
      throw std::runtime_error("feature accessor failed for '" + m.feature_ids[col] +
                               "' (column " + std::to_string(col) + "): " + e.what());
    }
    d.evaluation_cost += m.costs.stage_cost[k];
    if (value.has_value()) {
      int bin = m.quantizer.quantize(col, *value);
      const MarginalTable& t = m.tables[k];
      int u = t.ancestor_stage == -1 ? -1 : ctx[t.ancestor_stage];
      b = update_belief(b, t.column(bin, u));
      ctx[k] = bin;
      d.trace.push_back({col, bin, b});
    } else {
      d.trace.push_back({col, -1, b}); // belief carries over unchanged
    }
    ++k;
  }

  d.predicted = classify(b, m.costs);
  d.features_used = k;
  return d;
}

FeatureAccessor row_accessor(const LabeledDataset& ds, std::size_t row) {
  if (row >= ds.n_instances) throw std::out_of_range("row past end of dataset");
  return [&ds, row](std::size_t feature) -> std::optional<double> {
    if (feature >= ds.n_features) throw std::out_of_range("feature column out of range");
    return ds.at(row, feature);
  };
}

FeatureAccessor masked_row_accessor(const LabeledDataset& ds, std::size_t row,
                                    std::vector<std::size_t> missing) {
  if (row >= ds.n_instances) throw std::out_of_range("row past end of dataset");
  std::sort(missing.begin(), missing.end());
  return [&ds, row, missing = std::move(missing)](std::size_t feature) -> std::optional<double> {
    if (feature >= ds.n_features) throw std::out_of_range("feature column out of range");
    if (std::binary_search(missing.begin(), missing.end(), feature)) return std::nullopt;
    return ds.at(row, feature);
  };
}

} // namespace stopwise
