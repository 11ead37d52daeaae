#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "stopwise/belief.hpp"
#include "stopwise/structure.hpp"

namespace stopwise {

/// Action tag on an alpha vector: stop with a class, or keep evaluating.
inline constexpr int kContinueAction = -1;

/// Linear functional over beliefs; the stage value function is the pointwise
/// minimum of a stage's vectors.
struct AlphaVector {
  std::vector<double> w;
  int action = kContinueAction; // kContinueAction, or the class to stop with

  bool stops() const { return action != kContinueAction; }
  double value(const Belief& b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * b[i];
    return s;
  }
};

/// Alpha vectors for one stage, bucketed by the realized bins of the tracked
/// earlier positions (the "context"). Positions are 0-based indices into the
/// feature ordering; the context key is a mixed-radix encoding of their bins.
struct StageSet {
  std::vector<int> tracked; // ascending ordering positions whose bins are conditioned on
  std::map<std::uint64_t, std::vector<AlphaVector>> buckets; // stop vectors first in each
};

/// Stage-indexed value function: stages[k] holds the sets consulted after k
/// features have been requested; the final stage offers only stopping.
struct StagePolicy {
  std::vector<AlphaVector> stop_vectors; // one per class, class order
  std::vector<StageSet> stages;          // horizon()+1 entries

  int horizon() const { return static_cast<int>(stages.size()) - 1; }
};

/// Reachable beliefs per stage, bucketed by the same context keys the solver
/// conditions its backups on.
struct BeliefBank {
  std::vector<std::vector<int>> tracked;                           // per stage
  std::vector<std::map<std::uint64_t, std::vector<Belief>>> stages; // per stage
};

struct SolverOptions {
  /// Bound on the per-stage context keyspace; the positions whose next use is
  /// farthest away are untracked first when the bound would be exceeded.
  std::size_t context_cap = 4096;
  /// Randomized point selection per stage: back up only beliefs whose value
  /// has not already improved over stopping. Approximate; off by default, the
  /// full sweep backs up every banked belief.
  bool randomized = false;
  std::uint64_t seed = 0; // randomized-variant shuffling
};

/// Which earlier positions each stage's backups must condition on: ancestors
/// still needed by some future stage, trimmed to the keyspace bound with a
/// farthest-next-use rule. tracked[k+1] is always a subset of tracked[k] + {k}.
std::vector<std::vector<int>> tracked_positions(const std::vector<MarginalTable>& tables,
                                                std::size_t context_cap);

/// Mixed-radix context key for the given tracked positions. `bin_of(p)` must
/// return the realized bin of ordering position p.
template <typename BinOf>
std::uint64_t context_key(const std::vector<int>& tracked,
                          const std::vector<MarginalTable>& tables, BinOf&& bin_of) {
  std::uint64_t key = 0, stride = 1;
  for (int p : tracked) {
    key += static_cast<std::uint64_t>(bin_of(p)) * stride;
    stride *= static_cast<std::uint64_t>(tables[p].bins);
  }
  return key;
}

/// Run the Bayes-update chain of up to `beta` randomly chosen training
/// instances through their ordered features, collecting the beliefs reached
/// at every stage (deduplicated per context bucket). Stage 0 holds only the
/// prior.
BeliefBank sample_beliefs(const std::vector<MarginalTable>& tables, const Belief& priors,
                          const QuantizedDataset& train, const FeatureOrdering& ord,
                          std::size_t beta, std::uint64_t seed,
                          const SolverOptions& opts = {});

/// Every belief reachable by some observation sequence, per stage and
/// context. Throws if the sequence count exceeds `guard`.
BeliefBank exhaustive_beliefs(const std::vector<MarginalTable>& tables, const Belief& priors,
                              const FeatureOrdering& ord, const SolverOptions& opts = {},
                              std::size_t guard = 1000000);

/// One point-based backup: build a continue vector per (banked belief,
/// ancestor-bin context) against the next stage's set, union with the stop
/// vectors, and prune duplicates and dominated vectors. Exposed standalone
/// for single-stage problems and tests; solve() runs the context-bucketed
/// equivalent over the whole horizon.
std::vector<AlphaVector> backup_stage(const std::vector<AlphaVector>& next,
                                      const MarginalTable& delta, double e_next,
                                      const CostModel& cm, const std::vector<Belief>& bank);

/// Backward sweep over all stages; deterministic given the bank.
StagePolicy solve(const std::vector<MarginalTable>& tables, const Belief& priors,
                  const FeatureOrdering& ord, const CostModel& cm, const BeliefBank& bank,
                  const SolverOptions& opts = {});

/// Value of the policy at a belief in a given stage and context, together
/// with the chosen action. Context bins are given per ordering position with
/// -1 for "unknown"; unknown or unsampled contexts fall back to the union of
/// the stage's buckets. Ties prefer stopping, then the earliest vector.
struct PolicyDecision {
  double value = 0.0;
  int action = kContinueAction;
};
PolicyDecision policy_argmin(const StagePolicy& policy, const std::vector<MarginalTable>& tables,
                             int stage, const std::vector<int>& ctx_bins, const Belief& b);

/// Exhaustive-recursion oracle: exact optimal expected cost from the prior,
/// plus the optimal action at every observation history.
struct BruteForceNode {
  bool stop = false;
  int declared = 0; // cost-minimizing class at the node (used when stopping)
  double value = 0.0;
};
struct BruteForceResult {
  double value = 0.0;
  std::map<std::vector<int>, BruteForceNode> decisions;
};
BruteForceResult brute_force_value(const std::vector<MarginalTable>& tables, const Belief& priors,
                                   const FeatureOrdering& ord, const CostModel& cm,
                                   std::size_t guard = 1000000);

/// Exact expected cost of executing the trained policy, by enumerating every
/// observation sequence (same guard as the oracle).
double expected_policy_cost(const StagePolicy& policy, const std::vector<MarginalTable>& tables,
                            const Belief& priors, const FeatureOrdering& ord, const CostModel& cm,
                            std::size_t guard = 1000000);

/// Small random stopping problem with smoothed tables: K' <= 3, V = 2,
/// L in {2,3}, random ancestry, random evaluation cost in [0.01, 1],
/// alternating 0-1 / random misclassification costs.
struct SyntheticProblem {
  std::vector<MarginalTable> tables;
  Belief priors;
  FeatureOrdering ord;
  CostModel cm;
};
SyntheticProblem make_random_problem(std::uint64_t seed);

/// Solver-vs-oracle equivalence sweep over seeded random problems.
struct OracleCheckReport {
  int trials = 0;
  int failures = 0;          // gaps above 1e-9
  double max_value_gap = 0.0;  // |stage-0 policy value - oracle optimum|
  double max_policy_gap = 0.0; // |executed-policy expected cost - oracle optimum|
};
OracleCheckReport oracle_check(int trials, std::uint64_t base_seed);

} // namespace stopwise
