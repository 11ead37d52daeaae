#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stopwise/policy.hpp"
#include "stopwise/runtime.hpp"

using namespace stopwise;

namespace {

Belief random_belief(std::mt19937_64& rng, int L) {
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  Belief b(L);
  double s = 0.0;
  for (int c = 0; c < L; ++c) s += (b[c] = unif(rng));
  for (int c = 0; c < L; ++c) b[c] /= s;
  return b;
}

MarginalTable root_table(int stage, int bins, int L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  MarginalTable t;
  t.stage = stage;
  t.feature = stage;
  t.ancestor_stage = -1;
  t.bins = bins;
  t.ancestor_bins = 1;
  t.n_classes = L;
  t.class_only.resize(static_cast<std::size_t>(bins) * L);
  for (int c = 0; c < L; ++c) {
    double s = 0.0;
    for (int v = 0; v < bins; ++v) s += (t.class_only[static_cast<std::size_t>(v) * L + c] = unif(rng));
    for (int v = 0; v < bins; ++v) t.class_only[static_cast<std::size_t>(v) * L + c] /= s;
  }
  t.p = t.class_only;
  return t;
}

/// Model whose hand-written policy always continues, so classification walks
/// the full horizon; exercises the per-stage inference path.
PolicyModel full_walk_model(int horizon) {
  PolicyModel m;
  m.priors = {0.5, 0.5};
  m.costs = CostModel::zero_one(2);
  m.costs.stage_cost.assign(horizon, 0.001);
  m.label_values = {0.0, 1.0};
  m.quantizer.bins = 2;
  m.quantizer.features.resize(horizon);
  for (auto& f : m.quantizer.features) f.cuts = {0.5};
  for (int k = 0; k < horizon; ++k) {
    // alternate the informative direction so the belief never saturates
    m.tables.push_back(root_table(k, 2, 2, 0));
    m.tables.back().class_only = k % 2 ? std::vector<double>{0.6, 0.4, 0.4, 0.6}
                                       : std::vector<double>{0.4, 0.6, 0.6, 0.4};
    m.tables.back().p = m.tables.back().class_only;
    m.feature_ids.push_back("f" + std::to_string(k));
    m.ordering.order.push_back(k);
    m.ordering.columns.push_back(k);
    m.ordering.ancestor_pos.push_back(-1);
  }
  m.policy.stop_vectors = {{{0.0, 1.0}, 0}, {{1.0, 0.0}, 1}};
  m.policy.stages.resize(horizon + 1);
  AlphaVector always_continue{{0.0, 0.0}, kContinueAction};
  for (int k = 0; k < horizon; ++k)
    m.policy.stages[k].buckets[0] = {m.policy.stop_vectors[0], m.policy.stop_vectors[1],
                                     always_continue};
  return m;
}

void BM_BeliefUpdate(benchmark::State& state) {
  int L = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  Belief b = random_belief(rng, L);
  std::vector<double> ell(L);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int c = 0; c < L; ++c) ell[c] = unif(rng);
  for (auto _ : state) {
    b = update_belief(b, ell);
    benchmark::DoNotOptimize(b.data());
  }
}
BENCHMARK(BM_BeliefUpdate)->Arg(2)->Arg(10);

void BM_StageBackup(benchmark::State& state) {
  int n_beliefs = static_cast<int>(state.range(0));
  int bins = static_cast<int>(state.range(1));
  std::mt19937_64 rng(13);
  MarginalTable delta = root_table(0, bins, 2, 21);
  CostModel cm = CostModel::zero_one(2);
  cm.stage_cost = {0.05};
  std::vector<AlphaVector> next{{{0.0, 1.0}, 0}, {{1.0, 0.0}, 1}};
  std::vector<Belief> bank;
  for (int i = 0; i < n_beliefs; ++i) bank.push_back(random_belief(rng, 2));
  for (auto _ : state) {
    auto out = backup_stage(next, delta, 0.05, cm, bank);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_StageBackup)->Args({16, 4})->Args({256, 4})->Args({256, 16});

void BM_ClassifyInstance(benchmark::State& state) {
  int horizon = static_cast<int>(state.range(0));
  PolicyModel m = full_walk_model(horizon);
  auto acc = [](std::size_t f) -> std::optional<double> {
    return f % 2 ? 1.0 : 0.0;
  };
  for (auto _ : state) {
    Decision d = classify_instance(m, acc);
    benchmark::DoNotOptimize(d.predicted);
  }
}
BENCHMARK(BM_ClassifyInstance)->Arg(4)->Arg(64)->Arg(256);

void BM_SolveSmall(benchmark::State& state) {
  auto prob = make_random_problem(static_cast<std::uint64_t>(state.range(0)));
  auto bank = exhaustive_beliefs(prob.tables, prob.priors, prob.ord);
  for (auto _ : state) {
    auto pol = solve(prob.tables, prob.priors, prob.ord, prob.cm, bank);
    benchmark::DoNotOptimize(pol.stages.data());
  }
}
BENCHMARK(BM_SolveSmall)->Arg(3)->Arg(17);

} // namespace

BENCHMARK_MAIN();
