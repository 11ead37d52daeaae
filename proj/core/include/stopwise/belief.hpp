#pragma once

#include <vector>

namespace stopwise {

/// Probability vector over the classes; entries >= 0, sum 1.
using Belief = std::vector<double>;

/// Misclassification costs plus per-stage evaluation costs.
struct CostModel {
  int n_classes = 0;
  std::vector<double> q;          // row-major L x L; q[i*L+j] = cost of declaring j when i is true
  std::vector<double> stage_cost; // e_k per ordering position, all > 0

  double q_at(int i, int j) const { return q[static_cast<std::size_t>(i) * n_classes + j]; }

  /// Unit cost off-diagonal, zero on the diagonal; stage costs set separately.
  static CostModel zero_one(int n_classes);
};

/// Bayes update: elementwise product with the likelihood column, renormalized.
/// Likelihood entries must be positive (smoothing guarantees this upstream).
Belief update_belief(const Belief& b, const std::vector<double>& likelihood);

/// Expected cost of classifying now: min over columns j of sum_i q[i][j]*b[i].
double stop_cost(const Belief& b, const CostModel& cm);

/// Cost-minimizing class, ties broken toward the smallest index.
int classify(const Belief& b, const CostModel& cm);

} // namespace stopwise
