// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single PASS/FAIL line. The process exit code is the number of
// failed checks.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stopwise/harness.hpp"
#include "stopwise/infotheory.hpp"
#include "stopwise/model_io.hpp"

using namespace stopwise;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

/// Least-squares R^2 of y against a straight line in x.
double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  double xm = mean(x), ym = mean(y);
  double sxy = 0.0, sxx = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - xm) * (y[i] - ym);
    sxx += (x[i] - xm) * (x[i] - xm);
    sst += (y[i] - ym) * (y[i] - ym);
  }
  if (sst == 0.0) return 1.0;
  double b = sxy / sxx, a = ym - b * xm;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (a + b * x[i]);
    ssr += r * r;
  }
  return 1.0 - ssr / sst;
}

Belief random_belief(std::mt19937_64& rng, int L) {
  std::uniform_real_distribution<double> unif(1e-3, 1.0);
  Belief b(L);
  double s = 0.0;
  for (int c = 0; c < L; ++c) s += (b[c] = unif(rng));
  for (int c = 0; c < L; ++c) b[c] /= s;
  return b;
}

MarginalTable symmetric_stage(double flip) {
  MarginalTable t;
  t.stage = 0;
  t.feature = 0;
  t.ancestor_stage = -1;
  t.bins = 2;
  t.ancestor_bins = 1;
  t.n_classes = 2;
  t.class_only = {1.0 - flip, flip, flip, 1.0 - flip};
  t.p = t.class_only;
  return t;
}

FeatureOrdering single_stage_ordering() {
  FeatureOrdering ord;
  ord.order = {0};
  ord.columns = {0};
  ord.ancestor_pos = {-1};
  return ord;
}

/// 24-row binary set with two informative features in the same relevance
/// band (neither perfect, both above half the maximum score) plus one
/// label-independent column: f0 flips the label on one row, f1 on one row
/// per class, f2 alternates.
LabeledDataset correlated_toy_dataset() {
  LabeledDataset ds;
  ds.n_instances = 24;
  ds.n_features = 3;
  ds.n_classes = 2;
  ds.feature_ids = {"f0", "f1", "f2"};
  ds.label_values = {0.0, 1.0};
  for (int i = 0; i < 24; ++i) {
    int label = i < 12 ? 0 : 1;
    int f0 = i == 0 ? 1 - label : label;
    int f1 = (i == 1 || i == 13) ? 1 - label : label;
    ds.labels.push_back(label);
    ds.values.push_back(f0);
    ds.values.push_back(f1);
    ds.values.push_back(i % 2);
  }
  return ds;
}

/// Continuous dataset of equally informative independent features, so the
/// relevance band keeps all of them at every bin count.
LabeledDataset equal_strength_dataset(std::size_t n, std::size_t k, double sigma,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  LabeledDataset ds;
  ds.n_instances = n;
  ds.n_features = k;
  ds.n_classes = 2;
  for (std::size_t j = 0; j < k; ++j) ds.feature_ids.push_back("f" + std::to_string(j));
  ds.label_values = {0.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    int y = static_cast<int>(i % 2);
    ds.labels.push_back(y);
    for (std::size_t j = 0; j < k; ++j) ds.values.push_back(y + noise(rng));
  }
  return ds;
}

/// Model whose hand-written policy always continues (the continue vector is
/// pinned at zero, strictly below the stopping cost away from the simplex
/// vertices), so classification walks the entire horizon.
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
    m.tables.push_back(symmetric_stage(k % 2 ? 0.4 : 0.6));
    m.tables.back().stage = k;
    m.tables.back().feature = k;
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

ExperimentSpec spambase_spec() {
  ExperimentSpec spec;
  spec.data = std::string(STOPWISE_DATA_DIR) + "/spambase.csv";
  spec.folds = 5;
  spec.seed = 0;
  spec.beta = 100;
  spec.bins_grid = {10};
  spec.cost_e_grid = {0.01};
  spec.structure_grid = {StructureKind::Tree};
  spec.missing_grid = {0.0};
  return spec;
}

struct FoldSummary {
  double accuracy = 0.0;
  double avg_features = 0.0;
  std::string error;
};

FoldSummary summarize(const std::vector<ExperimentRow>& rows) {
  FoldSummary s;
  std::vector<double> acc, feats;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      s.error = r.error;
      return s;
    }
    acc.push_back(r.report.accuracy);
    feats.push_back(r.report.avg_features);
  }
  s.accuracy = mean(acc);
  s.avg_features = mean(feats);
  return s;
}

int g_failures = 0;

void report(int idx, bool pass, const std::string& what, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", idx, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

// --- criterion 1: solver-vs-oracle equivalence on seeded random problems ---
void criterion_1() {
  double t0 = now_s();
  OracleCheckReport rep = oracle_check(200, 42);
  double elapsed = now_s() - t0;
  std::ostringstream d;
  d << "trials=" << rep.trials << " failures=" << rep.failures << " max_value_gap="
    << rep.max_value_gap << " max_policy_gap=" << rep.max_policy_gap << " time=" << elapsed
    << "s";
  report(1, rep.failures == 0 && rep.trials >= 200 && elapsed < 10.0,
         "stage-0 value and executed-policy cost match the exhaustive oracle within 1e-9",
         d.str());
}

// --- criterion 2: hand-computed single-feature problem ---
void criterion_2() {
  std::vector<MarginalTable> tables{symmetric_stage(0.1)};
  FeatureOrdering ord = single_stage_ordering();
  Belief prior{0.5, 0.5};
  auto bank = exhaustive_beliefs(tables, prior, ord);

  CostModel cheap = CostModel::zero_one(2);
  cheap.stage_cost = {0.05};
  auto pol_cheap = solve(tables, prior, ord, cheap, bank);
  auto d_cheap = policy_argmin(pol_cheap, tables, 0, {-1}, prior);

  CostModel dear = CostModel::zero_one(2);
  dear.stage_cost = {0.5};
  auto pol_dear = solve(tables, prior, ord, dear, bank);
  auto d_dear = policy_argmin(pol_dear, tables, 0, {-1}, prior);

  bool pass = std::abs(d_cheap.value - 0.15) <= 1e-12 && d_cheap.action == kContinueAction &&
              std::abs(d_dear.value - 0.5) <= 1e-12 && d_dear.action != kContinueAction;
  std::ostringstream d;
  d << "e=0.05: value=" << d_cheap.value << " action="
    << (d_cheap.action == kContinueAction ? "continue" : "stop") << "; e=0.5: value="
    << d_dear.value << " action=" << (d_dear.action == kContinueAction ? "continue" : "stop");
  report(2, pass, "single-feature toy gives value 0.15/continue and 0.5/stop exactly", d.str());
}

// --- criterion 3: invariant suites ---
void criterion_3() {
  std::ostringstream d;
  bool pass = true;

  { // belief normalization over 1e5 updates
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(1e-3, 1.0);
    double worst = 0.0;
    Belief b = random_belief(rng, 3);
    for (int i = 0; i < 100000; ++i) {
      std::vector<double> ell(3);
      for (double& x : ell) x = unif(rng);
      b = update_belief(b, ell);
      double s = 0.0;
      for (double x : b) s += x;
      worst = std::max(worst, std::abs(s - 1.0));
    }
    pass = pass && worst <= 1e-12;
    d << "norm_err=" << worst;
  }

  { // concavity of the stopping cost (Jensen on random mixtures)
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      int L = 2 + static_cast<int>(rng() % 3);
      CostModel cm;
      cm.n_classes = L;
      cm.q.assign(static_cast<std::size_t>(L) * L, 0.0);
      for (int a = 0; a < L; ++a)
        for (int c = 0; c < L; ++c)
          if (a != c) cm.q[static_cast<std::size_t>(a) * L + c] = unif(rng) + 0.05;
      Belief x = random_belief(rng, L), y = random_belief(rng, L);
      double lam = unif(rng);
      Belief mix(L);
      for (int c = 0; c < L; ++c) mix[c] = lam * x[c] + (1 - lam) * y[c];
      double gap = lam * stop_cost(x, cm) + (1 - lam) * stop_cost(y, cm) - stop_cost(mix, cm);
      worst = std::max(worst, gap);
    }
    pass = pass && worst <= 1e-12;
    d << " concavity_gap=" << worst;
  }

  { // stage values never exceed stopping on any banked belief
    double worst = -1.0;
    for (std::uint64_t seed = 300; seed < 320; ++seed) {
      auto prob = make_random_problem(seed);
      auto bank = exhaustive_beliefs(prob.tables, prob.priors, prob.ord);
      auto pol = solve(prob.tables, prob.priors, prob.ord, prob.cm, bank);
      for (std::size_t k = 0; k < bank.stages.size(); ++k)
        for (const auto& [key, beliefs] : bank.stages[k]) {
          std::vector<int> ctx(prob.tables.size(), -1);
          std::uint64_t rest = key;
          for (int p : bank.tracked[k]) {
            ctx[p] = static_cast<int>(rest % prob.tables[p].bins);
            rest /= prob.tables[p].bins;
          }
          for (const Belief& b : beliefs) {
            auto dec = policy_argmin(pol, prob.tables, static_cast<int>(k), ctx, b);
            worst = std::max(worst, dec.value - stop_cost(b, prob.cm));
          }
        }
    }
    pass = pass && worst <= 1e-12;
    d << " value_minus_stop_max=" << worst;
  }

  { // likelihood slices of trained models are normalized
    double worst = 0.0;
    auto ds = correlated_toy_dataset();
    for (auto kind : {StructureKind::Tree, StructureKind::Clique, StructureKind::Line}) {
      TrainConfig cfg;
      cfg.bins = 2;
      cfg.structure = kind;
      cfg.beta = 24;
      auto m = train_model(ds, cfg);
      for (const auto& t : m.tables) {
        for (int u = 0; u < t.ancestor_bins; ++u)
          for (int c = 0; c < t.n_classes; ++c) {
            double s = 0.0;
            for (int v = 0; v < t.bins; ++v) s += t.at(v, u, c);
            worst = std::max(worst, std::abs(s - 1.0));
          }
        for (int c = 0; c < t.n_classes; ++c) {
          double s = 0.0;
          for (int v = 0; v < t.bins; ++v) s += t.class_at(v, c);
          worst = std::max(worst, std::abs(s - 1.0));
        }
      }
    }
    pass = pass && worst <= 1e-9;
    d << " slice_norm_err=" << worst;
  }

  { // scaling every cost by c>0 keeps all stop/continue and class choices
    bool same = true;
    for (std::uint64_t seed = 600; seed < 625 && same; ++seed) {
      auto base = make_random_problem(seed);
      auto ref = brute_force_value(base.tables, base.priors, base.ord, base.cm);
      for (double c : {0.1, 1.0, 7.3}) {
        auto scaled = base;
        for (double& q : scaled.cm.q) q *= c;
        for (double& e : scaled.cm.stage_cost) e *= c;
        auto got = brute_force_value(scaled.tables, scaled.priors, scaled.ord, scaled.cm);
        auto it = ref.decisions.begin();
        auto jt = got.decisions.begin();
        for (; it != ref.decisions.end() && same; ++it, ++jt)
          same = it->first == jt->first && it->second.stop == jt->second.stop &&
                 it->second.declared == jt->second.declared;
      }
    }
    pass = pass && same;
    d << " scale_invariant=" << (same ? "yes" : "no");
  }

  { // evaluation cost above every misclassification cost => zero features read
    auto ds = correlated_toy_dataset();
    TrainConfig cfg;
    cfg.bins = 2;
    cfg.cost_e = 2.0; // exceeds the 0-1 cost ceiling of 1
    cfg.beta = 24;
    auto m = train_model(ds, cfg);
    int max_used = 0;
    for (std::size_t i = 0; i < ds.n_instances; ++i) {
      auto dec = classify_instance(m, row_accessor(ds, i));
      max_used = std::max(max_used, dec.features_used);
    }
    pass = pass && max_used == 0;
    d << " max_features_at_prohibitive_cost=" << max_used;
  }

  report(3, pass,
         "normalization, concavity, value-vs-stop, slice norms, cost scaling, and "
         "prohibitive-cost invariants hold",
         d.str());
}

// --- criterion 4: fully connected structures collapse to one feature ---
void criterion_4() {
  auto ds = correlated_toy_dataset();
  TrainConfig cfg;
  cfg.bins = 2;
  cfg.structure = StructureKind::Clique;
  cfg.cost_e = 0.01;
  cfg.beta = 24;
  auto m1 = train_model(ds, cfg);
  auto m2 = train_model(ds, cfg);
  auto rep = evaluate(m1, ds);

  bool pass = m1.structure.features.size() >= 2 && m1.ordering.order.size() == 1 &&
              rep.avg_features <= 1.0 && model_to_json(m1) == model_to_json(m2);
  std::ostringstream d;
  d << "kept=" << m1.structure.features.size() << " horizon=" << m1.ordering.order.size()
    << " avg_features=" << rep.avg_features
    << " deterministic=" << (model_to_json(m1) == model_to_json(m2) ? "yes" : "no");
  report(4, pass, "clique structure yields a one-feature ordering and <=1 average features",
         d.str());
}

// --- criterion 5: Spambase cross-validated accuracy and feature budget ---
void criterion_5() {
  double t0 = now_s();
  std::ostringstream d;
  bool any_inside = false;
  for (auto rule : {BinningRule::Width, BinningRule::Frequency}) {
    ExperimentSpec spec = spambase_spec();
    spec.binning = rule;
    FoldSummary s = summarize(run_experiment(spec));
    const char* name = rule == BinningRule::Width ? "width" : "frequency";
    if (!s.error.empty()) {
      d << name << ": ERROR " << s.error << "; ";
      continue;
    }
    bool inside = s.accuracy >= 0.7804 && s.accuracy <= 0.8404 && s.avg_features >= 2.72 &&
                  s.avg_features <= 6.72;
    any_inside = any_inside || inside;
    d << name << ": acc=" << s.accuracy << " feats=" << s.avg_features
      << (inside ? " [inside]" : " [outside]") << "; ";
  }
  double elapsed = now_s() - t0;
  d << "windows acc=0.8104+-0.03 feats=4.72+-2.0, time=" << elapsed << "s";
  report(5, any_inside && elapsed <= 300.0,
         "5-fold Spambase run lands in the published accuracy and feature windows", d.str());
}

// --- criterion 6: smaller evaluation costs consume more features ---
void criterion_6() {
  ExperimentSpec spec = spambase_spec();
  spec.kind = ExperimentKind::CostSweep;
  spec.binning = BinningRule::Frequency;
  spec.cost_e_grid = {0.1, 0.01, 0.001, 0.0001}; // decreasing cost
  auto rows = run_experiment(spec);

  std::ostringstream d;
  std::vector<double> feats;
  std::string error;
  for (std::size_t g = 0; g < spec.cost_e_grid.size(); ++g) {
    std::vector<ExperimentRow> fold_rows;
    for (const auto& r : rows)
      if (r.grid_index == static_cast<int>(g)) fold_rows.push_back(r);
    FoldSummary s = summarize(fold_rows);
    if (!s.error.empty()) error = s.error;
    feats.push_back(s.avg_features);
    d << "e=" << spec.cost_e_grid[g] << ": feats=" << s.avg_features << "; ";
  }

  int inversions = 0;
  double worst_inversion = 0.0;
  for (std::size_t i = 0; i + 1 < feats.size(); ++i)
    if (feats[i + 1] < feats[i] - 1e-12) { // fewer features despite a cheaper cost
      ++inversions;
      worst_inversion = std::max(worst_inversion, feats[i] - feats[i + 1]);
    }
  bool pass = error.empty() &&
              (inversions == 0 || (inversions == 1 && worst_inversion <= 0.5));
  d << "inversions=" << inversions << " worst=" << worst_inversion;
  if (!error.empty()) d << " ERROR " << error;
  report(6, pass, "average features grow monotonically as the evaluation cost shrinks",
         d.str());
}

// --- criterion 7: robustness to 10% missing features ---
void criterion_7() {
  ExperimentSpec spec = spambase_spec();
  spec.kind = ExperimentKind::MissingRobustness;
  spec.binning = BinningRule::Frequency;
  spec.missing_grid = {0.0, 10.0};
  auto rows = run_experiment(spec);

  std::vector<ExperimentRow> rows0, rows10;
  for (const auto& r : rows) (r.grid_index == 0 ? rows0 : rows10).push_back(r);
  FoldSummary s0 = summarize(rows0), s10 = summarize(rows10);

  bool pass = s0.error.empty() && s10.error.empty() && s0.accuracy > 0.0 &&
              std::abs(s10.accuracy - s0.accuracy) <= 0.05 * s0.accuracy;
  std::ostringstream d;
  d << "acc@0%=" << s0.accuracy << " acc@10%=" << s10.accuracy << " rel_change="
    << (s0.accuracy > 0 ? std::abs(s10.accuracy - s0.accuracy) / s0.accuracy : 0.0);
  if (!s0.error.empty()) d << " ERROR " << s0.error;
  if (!s10.error.empty()) d << " ERROR " << s10.error;
  report(7, pass, "accuracy with 10% missing features stays within 5% relative", d.str());
}

// --- criterion 8: linear scaling of inference in the horizon and training in bins ---
void criterion_8() {
  std::ostringstream d;

  // Per-instance inference time across horizons, on hand-built models whose
  // policy always continues; every stage then costs one vector scan plus one
  // belief update.
  std::vector<double> horizons{10, 100, 1000};
  std::vector<double> per_instance;
  bool walked_fully = true;
  for (double h : horizons) {
    int horizon = static_cast<int>(h);
    PolicyModel m = full_walk_model(horizon);
    auto acc = [](std::size_t f) -> std::optional<double> { return f % 2 ? 1.0 : 0.0; };
    auto probe = classify_instance(m, acc);
    walked_fully = walked_fully && probe.features_used == horizon;

    int calls = std::max(50, 40000 / horizon);
    std::vector<double> times;
    for (int rep = 0; rep < 5; ++rep) {
      double t0 = now_s();
      for (int i = 0; i < calls; ++i) {
        auto dec = classify_instance(m, acc);
        if (dec.features_used != horizon) walked_fully = false;
      }
      times.push_back((now_s() - t0) / calls);
    }
    per_instance.push_back(median(times));
  }
  double r2_inference = linear_r2(horizons, per_instance);
  d << "inference us/instance @K'={10,100,1000}: " << per_instance[0] * 1e6 << ", "
    << per_instance[1] * 1e6 << ", " << per_instance[2] * 1e6 << " R2=" << r2_inference << "; ";

  // Training time across bin counts on one fixed dataset. The controlled
  // setup isolates the per-bin backup work: ten equally informative
  // independent features, a dependency draw with no feature-to-feature edges
  // (seed 3431), and a context budget of one so every stage scans one global
  // vector set per bin. Every run must keep all ten features with a
  // ten-stage ordering, otherwise the grid is not comparable.
  auto ds = equal_strength_dataset(4000, 10, 0.8, 7);
  std::vector<double> bins_axis{12, 16, 20, 24, 32};
  std::vector<double> train_time;
  bool controlled = true;
  for (double v : bins_axis) {
    std::vector<double> times;
    for (int rep = 0; rep < 5; ++rep) {
      TrainConfig cfg;
      cfg.bins = static_cast<int>(v);
      cfg.binning = BinningRule::Frequency;
      cfg.cost_e = 0.001;
      cfg.beta = 128;
      cfg.structure = StructureKind::Random;
      cfg.seed = 3431;
      cfg.solver.context_cap = 1;
      TrainTimings tm;
      auto m = train_model(ds, cfg, &tm);
      times.push_back(tm.preprocess_s + tm.train_s);
      controlled = controlled && m.structure.features.size() == 10 &&
                   m.ordering.order.size() == 10;
    }
    train_time.push_back(median(times));
  }
  double r2_train = linear_r2(bins_axis, train_time);
  d << "train ms @V={12,16,20,24,32}: ";
  for (double t : train_time) d << t * 1e3 << " ";
  d << "R2=" << r2_train << (controlled ? "" : " [grid not comparable]");

  report(8, walked_fully && controlled && r2_inference >= 0.95 && r2_train >= 0.9,
         "inference time is linear in the horizon and training time linear in the bin count",
         d.str());
}

} // namespace

int main() {
  std::printf("acceptance: 8 criteria\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("acceptance: %d of 8 failed\n", g_failures);
  return g_failures;
}
