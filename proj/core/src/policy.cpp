#include "stopwise/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace stopwise {

namespace {

constexpr double kVectorDedupEps = 1e-12;
constexpr double kSampledBankDedupEps = 1e-9;
constexpr double kExhaustiveBankDedupEps = 1e-12;

double inf_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void push_belief(std::vector<Belief>& bucket, const Belief& b, double eps) {
  for (const Belief& x : bucket)
    if (inf_dist(x, b) <= eps) return;
  bucket.push_back(b);
}

std::vector<AlphaVector> make_stop_vectors(const CostModel& cm) {
  std::vector<AlphaVector> out(cm.n_classes);
  for (int j = 0; j < cm.n_classes; ++j) {
    out[j].action = j;
    out[j].w.resize(cm.n_classes);
    for (int i = 0; i < cm.n_classes; ++i) out[j].w[i] = cm.q_at(i, j);
  }
  return out;
}

/// Keep the stop vectors unconditionally; drop continue vectors that
/// duplicate an earlier kept vector or are pointwise dominated by another
/// kept vector (dominance at the simplex corners implies dominance
/// everywhere for linear functionals).
void dedup_and_prune(std::vector<AlphaVector>& set, std::size_t n_stop) {
  std::vector<AlphaVector> kept(set.begin(), set.begin() + n_stop);
  for (std::size_t i = n_stop; i < set.size(); ++i) {
    bool dup = false;
    for (const AlphaVector& k : kept)
      if (inf_dist(k.w, set[i].w) <= kVectorDedupEps) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(std::move(set[i]));
  }
  std::vector<bool> dominated(kept.size(), false);
  for (std::size_t i = n_stop; i < kept.size(); ++i) {
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (j == i || dominated[j]) continue;
      bool dom = true;
      for (std::size_t c = 0; c < kept[i].w.size() && dom; ++c)
        dom = kept[j].w[c] <= kept[i].w[c];
      if (dom) {
        dominated[i] = true;
        break;
      }
    }
  }
  set.clear();
  for (std::size_t i = 0; i < kept.size(); ++i)
    if (!dominated[i]) set.push_back(std::move(kept[i]));
}

/// Point-based backup of one (belief, ancestor-bin) pair: for every next
/// observation pick the minimizing next-stage vector at the updated belief,
/// then roll the pieces into a single continue vector.
template <typename NextFor>
AlphaVector continue_backup(const MarginalTable& delta, int u, double e_next, const Belief& b,
                            NextFor&& next_for) {
  int n = delta.n_classes;
  AlphaVector out;
  out.action = kContinueAction;
  out.w.assign(n, e_next);
  for (int v = 0; v < delta.bins; ++v) {
    std::vector<double> ell = delta.column(v, u);
    const std::vector<AlphaVector>& cands = next_for(v);
    const AlphaVector* best = nullptr;
    double best_val = 0.0;
    for (const AlphaVector& a : cands) {
      double val = 0.0;
      for (int i = 0; i < n; ++i) val += a.w[i] * ell[i] * b[i];
      if (!best || val < best_val) {
        best = &a;
        best_val = val;
      }
    }
    if (!best) throw std::logic_error("backup: empty candidate set");
    for (int i = 0; i < n; ++i) out.w[i] += ell[i] * best->w[i];
  }
  return out;
}

std::size_t sequence_count(const std::vector<MarginalTable>& tables, std::size_t guard) {
  std::size_t prod = 1;
  for (const MarginalTable& t : tables) {
    prod *= static_cast<std::size_t>(t.bins);
    if (prod > guard)
      throw std::invalid_argument("observation-sequence count exceeds guard of " +
                                  std::to_string(guard));
  }
  return prod;
}

void validate_problem(const std::vector<MarginalTable>& tables, const Belief& priors,
                      const FeatureOrdering& ord, const CostModel* cm) {
  if (ord.order.size() != tables.size())
    throw std::invalid_argument("ordering length does not match table count");
  for (std::size_t k = 0; k < tables.size(); ++k) {
    int a = tables[k].ancestor_stage;
    if (a != -1 && (a < 0 || a >= static_cast<int>(k)))
      throw std::invalid_argument("table ancestor stage out of range");
    if (tables[k].n_classes != static_cast<int>(priors.size()))
      throw std::invalid_argument("table class count does not match prior");
  }
  if (cm) {
    if (cm->n_classes != static_cast<int>(priors.size()))
      throw std::invalid_argument("cost model class count does not match prior");
    if (cm->stage_cost.size() != tables.size())
      throw std::invalid_argument("per-stage evaluation cost count does not match horizon");
    for (double e : cm->stage_cost)
      if (!(e > 0)) throw std::invalid_argument("evaluation costs must be positive");
  }
}

} // namespace

std::vector<std::vector<int>> tracked_positions(const std::vector<MarginalTable>& tables,
                                                std::size_t context_cap) {
  int horizon = static_cast<int>(tables.size());
  std::vector<std::vector<int>> out(horizon + 1);
  std::set<int> dropped;
  for (int k = 0; k <= horizon; ++k) {
    std::set<int> need;
    for (int j = k; j < horizon; ++j) {
      int a = tables[j].ancestor_stage;
      if (a >= 0 && a <= k - 1 && !dropped.count(a)) need.insert(a);
    }
    std::vector<int> tr(need.begin(), need.end());
    auto keyspace = [&]() {
      std::size_t prod = 1;
      for (int p : tr) {
        prod *= static_cast<std::size_t>(tables[p].bins);
        if (prod > context_cap) return prod;
      }
      return prod;
    };
    while (!tr.empty() && keyspace() > context_cap) {
      // Untrack the position whose next use lies farthest in the future.
      auto next_use = [&](int p) {
        for (int j = k; j < horizon; ++j)
          if (tables[j].ancestor_stage == p) return j;
        return horizon;
      };
      int victim = tr.front();
      int victim_use = next_use(victim);
      for (int p : tr) {
        int use = next_use(p);
        if (use > victim_use || (use == victim_use && p > victim)) {
          victim = p;
          victim_use = use;
        }
      }
      dropped.insert(victim);
      tr.erase(std::find(tr.begin(), tr.end(), victim));
    }
    out[k] = std::move(tr);
  }
  return out;
}

BeliefBank sample_beliefs(const std::vector<MarginalTable>& tables, const Belief& priors,
                          const QuantizedDataset& train, const FeatureOrdering& ord,
                          std::size_t beta, std::uint64_t seed, const SolverOptions& opts) {
  validate_problem(tables, priors, ord, nullptr);
  if (beta < 1) throw std::invalid_argument("belief bank size must be at least 1");
  if (train.n_instances == 0) throw std::invalid_argument("empty training set");
  int horizon = static_cast<int>(tables.size());

  BeliefBank bank;
  bank.tracked = tracked_positions(tables, opts.context_cap);
  bank.stages.resize(horizon + 1);
  push_belief(bank.stages[0][0], priors, kSampledBankDedupEps);

  std::vector<std::size_t> idx(train.n_instances);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(beta, idx.size()));

  std::vector<int> bins(horizon);
  for (std::size_t i : idx) {
    for (int k = 0; k < horizon; ++k) bins[k] = train.at(i, ord.columns[k]);
    Belief b = priors;
    for (int k = 0; k < horizon; ++k) {
      const MarginalTable& t = tables[k];
      int u = t.ancestor_stage == -1 ? -1 : bins[t.ancestor_stage];
      b = update_belief(b, t.column(bins[k], u));
      std::uint64_t key =
          context_key(bank.tracked[k + 1], tables, [&](int p) { return bins[p]; });
      push_belief(bank.stages[k + 1][key], b, kSampledBankDedupEps);
    }
  }
  return bank;
}

BeliefBank exhaustive_beliefs(const std::vector<MarginalTable>& tables, const Belief& priors,
                              const FeatureOrdering& ord, const SolverOptions& opts,
                              std::size_t guard) {
  validate_problem(tables, priors, ord, nullptr);
  sequence_count(tables, guard);
  int horizon = static_cast<int>(tables.size());

  BeliefBank bank;
  bank.tracked = tracked_positions(tables, opts.context_cap);
  bank.stages.resize(horizon + 1);

  std::vector<int> bins(horizon, -1);
  auto rec = [&](auto&& self, int k, const Belief& b) -> void {
    std::uint64_t key = context_key(bank.tracked[k], tables, [&](int p) { return bins[p]; });
    push_belief(bank.stages[k][key], b, kExhaustiveBankDedupEps);
    if (k == horizon) return;
    const MarginalTable& t = tables[k];
    for (int v = 0; v < t.bins; ++v) {
      int u = t.ancestor_stage == -1 ? -1 : bins[t.ancestor_stage];
      bins[k] = v;
      self(self, k + 1, update_belief(b, t.column(v, u)));
      bins[k] = -1;
    }
  };
  rec(rec, 0, priors);
  return bank;
}

std::vector<AlphaVector> backup_stage(const std::vector<AlphaVector>& next,
                                      const MarginalTable& delta, double e_next,
                                      const CostModel& cm, const std::vector<Belief>& bank) {
  if (next.empty()) throw std::invalid_argument("backup: empty next-stage set");
  std::vector<AlphaVector> out = make_stop_vectors(cm);
  std::size_t n_stop = out.size();
  std::vector<int> contexts;
  if (delta.ancestor_stage == -1)
    contexts.push_back(-1);
  else
    for (int u = 0; u < delta.ancestor_bins; ++u) contexts.push_back(u);
  for (const Belief& b : bank)
    for (int u : contexts)
      out.push_back(
          continue_backup(delta, u, e_next, b, [&](int) -> const std::vector<AlphaVector>& {
            return next;
          }));
  dedup_and_prune(out, n_stop);
  return out;
}

StagePolicy solve(const std::vector<MarginalTable>& tables, const Belief& priors,
                  const FeatureOrdering& ord, const CostModel& cm, const BeliefBank& bank,
                  const SolverOptions& opts) {
  validate_problem(tables, priors, ord, &cm);
  int horizon = static_cast<int>(tables.size());
  if (bank.stages.size() != static_cast<std::size_t>(horizon) + 1)
    throw std::invalid_argument("belief bank does not match horizon");

  StagePolicy pol;
  pol.stop_vectors = make_stop_vectors(cm);
  std::size_t n_stop = pol.stop_vectors.size();
  pol.stages.resize(horizon + 1);
  for (int k = 0; k <= horizon; ++k) pol.stages[k].tracked = bank.tracked[k];

  for (int k = horizon - 1; k >= 0; --k) {
    const MarginalTable& tab = tables[k];
    double e_next = cm.stage_cost[k];
    const std::vector<int>& tracked_here = pol.stages[k].tracked;
    const std::vector<int>& tracked_next = pol.stages[k + 1].tracked;

    auto next_bucket = [&](std::uint64_t key) -> const std::vector<AlphaVector>& {
      auto it = pol.stages[k + 1].buckets.find(key);
      // Contexts the bank never reached fall back to stopping, a safe upper
      // bound on the cost-to-go.
      return it != pol.stages[k + 1].buckets.end() ? it->second : pol.stop_vectors;
    };

    for (const auto& [key, beliefs] : bank.stages[k]) {
      std::vector<int> ctx(horizon, -1);
      std::uint64_t rest = key;
      for (int p : tracked_here) {
        ctx[p] = static_cast<int>(rest % tables[p].bins);
        rest /= tables[p].bins;
      }

      std::vector<int> contexts;
      if (tab.ancestor_stage == -1)
        contexts.push_back(-1);
      else if (ctx[tab.ancestor_stage] >= 0)
        contexts.push_back(ctx[tab.ancestor_stage]);
      else // ancestor untracked: union over its possible bins
        for (int u = 0; u < tab.ancestor_bins; ++u) contexts.push_back(u);

      auto backup_at = [&](const Belief& b, int u) {
        return continue_backup(tab, u, e_next, b,
                               [&](int v) -> const std::vector<AlphaVector>& {
                                 std::uint64_t nk = context_key(
                                     tracked_next, tables,
                                     [&](int p) { return p == k ? v : ctx[p]; });
                                 return next_bucket(nk);
                               });
      };

      std::vector<AlphaVector> out = pol.stop_vectors;
      if (!opts.randomized) {
        for (const Belief& b : beliefs)
          for (int u : contexts) out.push_back(backup_at(b, u));
      } else {
        // Back up points in random order, skipping any whose value some
        // already-added vector has pulled below the cost of stopping.
        std::mt19937_64 rng(opts.seed ^ (0x9E3779B97F4A7C15ull * (k + 1) + key));
        std::vector<std::size_t> idx(beliefs.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<AlphaVector> added;
        for (std::size_t id : idx) {
          const Belief& b = beliefs[id];
          double g = stop_cost(b, cm);
          bool improved = false;
          for (const AlphaVector& a : added)
            if (a.value(b) <= g + kVectorDedupEps) {
              improved = true;
              break;
            }
          if (improved) continue;
          const AlphaVector* best = nullptr;
          AlphaVector cand;
          for (int u : contexts) {
            AlphaVector c = backup_at(b, u);
            if (!best || c.value(b) < best->value(b)) {
              cand = std::move(c);
              best = &cand;
            }
          }
          if (best && best->value(b) <= g) added.push_back(std::move(cand));
        }
        for (AlphaVector& a : added) out.push_back(std::move(a));
      }
      dedup_and_prune(out, n_stop);
      pol.stages[k].buckets[key] = std::move(out);
    }
  }
  return pol;
}

PolicyDecision policy_argmin(const StagePolicy& policy, const std::vector<MarginalTable>& tables,
                             int stage, const std::vector<int>& ctx_bins, const Belief& b) {
  if (stage < 0 || stage > policy.horizon()) throw std::out_of_range("stage out of range");
  const StageSet& ss = policy.stages[stage];

  const std::vector<AlphaVector>* bucket = nullptr;
  bool known = true;
  for (int p : ss.tracked)
    if (ctx_bins[p] < 0) {
      known = false;
      break;
    }
  if (known) {
    std::uint64_t key = context_key(ss.tracked, tables, [&](int p) { return ctx_bins[p]; });
    auto it = ss.buckets.find(key);
    if (it != ss.buckets.end()) bucket = &it->second;
  }

  PolicyDecision out;
  const AlphaVector* best = nullptr;
  auto scan = [&](const std::vector<AlphaVector>& vs) {
    for (const AlphaVector& a : vs) {
      double val = a.value(b);
      if (!best || val < out.value) {
        best = &a;
        out.value = val;
        out.action = a.action;
      }
    }
  };
  if (bucket) {
    scan(*bucket); // stop vectors lead each bucket, so ties prefer stopping
  } else {
    // Unknown or unsampled context: stop vectors first, then the union of
    // every context's vectors at this stage.
    scan(policy.stop_vectors);
    for (const auto& [key, vs] : ss.buckets) scan(vs);
  }
  return out;
}

BruteForceResult brute_force_value(const std::vector<MarginalTable>& tables, const Belief& priors,
                                   const FeatureOrdering& ord, const CostModel& cm,
                                   std::size_t guard) {
  validate_problem(tables, priors, ord, &cm);
  sequence_count(tables, guard);
  int horizon = static_cast<int>(tables.size());

  BruteForceResult res;
  std::vector<int> hist;
  hist.reserve(horizon);
  auto rec = [&](auto&& self, int k, const Belief& b) -> double {
    double g = stop_cost(b, cm);
    BruteForceNode node{true, classify(b, cm), g};
    if (k < horizon) {
      const MarginalTable& t = tables[k];
      double cont = cm.stage_cost[k];
      for (int v = 0; v < t.bins; ++v) {
        int u = t.ancestor_stage == -1 ? -1 : hist[t.ancestor_stage];
        std::vector<double> ell = t.column(v, u);
        double p_obs = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) p_obs += ell[i] * b[i];
        hist.push_back(v);
        cont += p_obs * self(self, k + 1, update_belief(b, ell));
        hist.pop_back();
      }
      if (cont < g) node = {false, node.declared, cont}; // stop wins ties
    }
    res.decisions[hist] = node;
    return node.value;
  };
  res.value = rec(rec, 0, priors);
  return res;
}

double expected_policy_cost(const StagePolicy& policy, const std::vector<MarginalTable>& tables,
                            const Belief& priors, const FeatureOrdering& ord, const CostModel& cm,
                            std::size_t guard) {
  validate_problem(tables, priors, ord, &cm);
  sequence_count(tables, guard);
  int horizon = static_cast<int>(tables.size());

  std::vector<int> hist(horizon, -1);
  auto rec = [&](auto&& self, int k, const Belief& b) -> double {
    PolicyDecision d = policy_argmin(policy, tables, k, hist, b);
    if (k == horizon || d.action != kContinueAction) {
      int declared = classify(b, cm);
      double miss = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) miss += b[i] * cm.q_at(static_cast<int>(i), declared);
      return miss;
    }
    const MarginalTable& t = tables[k];
    double total = cm.stage_cost[k];
    for (int v = 0; v < t.bins; ++v) {
      int u = t.ancestor_stage == -1 ? -1 : hist[t.ancestor_stage];
      std::vector<double> ell = t.column(v, u);
      double p_obs = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) p_obs += ell[i] * b[i];
      hist[k] = v;
      total += p_obs * self(self, k + 1, update_belief(b, ell));
      hist[k] = -1;
    }
    return total;
  };
  return rec(rec, 0, priors);
}

SyntheticProblem make_random_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  int n_classes = std::uniform_int_distribution<int>(2, 3)(rng);
  int horizon = std::uniform_int_distribution<int>(1, 3)(rng);
  constexpr int kBins = 2;

  SyntheticProblem p;
  p.ord.order.resize(horizon);
  p.ord.columns.resize(horizon);
  p.ord.ancestor_pos.resize(horizon);
  std::iota(p.ord.order.begin(), p.ord.order.end(), 0);
  std::iota(p.ord.columns.begin(), p.ord.columns.end(), 0);

  p.tables.resize(horizon);
  for (int k = 0; k < horizon; ++k) {
    int anc = k == 0 ? -1 : std::uniform_int_distribution<int>(-1, k - 1)(rng);
    p.ord.ancestor_pos[k] = anc;
    MarginalTable& t = p.tables[k];
    t.stage = k;
    t.feature = k;
    t.ancestor_stage = anc;
    t.bins = kBins;
    t.ancestor_bins = anc == -1 ? 1 : kBins;
    t.n_classes = n_classes;
    t.p.resize(static_cast<std::size_t>(kBins) * t.ancestor_bins * n_classes);
    for (int u = 0; u < t.ancestor_bins; ++u)
      for (int c = 0; c < n_classes; ++c) {
        double a = uni(0.05, 0.95); // smoothed: bounded away from 0 and 1
        t.p[(0 * t.ancestor_bins + u) * n_classes + c] = a;
        t.p[(1 * t.ancestor_bins + u) * n_classes + c] = 1.0 - a;
      }
    t.class_only.assign(static_cast<std::size_t>(kBins) * n_classes, 0.0);
    for (int v = 0; v < kBins; ++v)
      for (int u = 0; u < t.ancestor_bins; ++u)
        for (int c = 0; c < n_classes; ++c)
          t.class_only[static_cast<std::size_t>(v) * n_classes + c] +=
              t.at(v, u, c) / t.ancestor_bins;
  }

  p.priors.resize(n_classes);
  double norm = 0.0;
  for (int c = 0; c < n_classes; ++c) norm += (p.priors[c] = uni(0.1, 1.0));
  for (int c = 0; c < n_classes; ++c) p.priors[c] /= norm;

  if (rng() & 1) {
    p.cm = CostModel::zero_one(n_classes);
  } else {
    p.cm.n_classes = n_classes;
    p.cm.q.assign(static_cast<std::size_t>(n_classes) * n_classes, 0.0);
    for (int i = 0; i < n_classes; ++i)
      for (int j = 0; j < n_classes; ++j)
        if (i != j) p.cm.q[static_cast<std::size_t>(i) * n_classes + j] = uni(0.1, 2.0);
  }
  p.cm.stage_cost.assign(horizon, uni(0.01, 1.0));
  return p;
}

OracleCheckReport oracle_check(int trials, std::uint64_t base_seed) {
  OracleCheckReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    SyntheticProblem prob = make_random_problem(base_seed + static_cast<std::uint64_t>(t));
    BeliefBank bank = exhaustive_beliefs(prob.tables, prob.priors, prob.ord);
    StagePolicy pol = solve(prob.tables, prob.priors, prob.ord, prob.cm, bank);

    std::vector<int> ctx(prob.tables.size(), -1);
    double j0 = policy_argmin(pol, prob.tables, 0, ctx, prob.priors).value;
    BruteForceResult oracle = brute_force_value(prob.tables, prob.priors, prob.ord, prob.cm);
    double executed = expected_policy_cost(pol, prob.tables, prob.priors, prob.ord, prob.cm);

    double value_gap = std::abs(j0 - oracle.value);
    double policy_gap = std::abs(executed - oracle.value);
    rep.max_value_gap = std::max(rep.max_value_gap, value_gap);
    rep.max_policy_gap = std::max(rep.max_policy_gap, policy_gap);
    if (value_gap > 1e-9 || policy_gap > 1e-9) ++rep.failures;
  }
  return rep;
}

} // namespace stopwise
