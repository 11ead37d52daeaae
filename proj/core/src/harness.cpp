#include "stopwise/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stopwise/infotheory.hpp"

namespace stopwise {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

PolicyModel train_model(const LabeledDataset& train, const TrainConfig& cfg,
                        TrainTimings* timings) {
  if (train.n_classes < 2) throw std::invalid_argument("training data has fewer than 2 classes");
  if (!cfg.cost_e_per_feature.empty() && cfg.cost_e_per_feature.size() != train.n_features)
    throw std::invalid_argument("per-feature cost vector does not match feature count");
  int L = train.n_classes;
  if (!cfg.cost_q.empty() && cfg.cost_q.size() != static_cast<std::size_t>(L) * L)
    throw std::invalid_argument("cost matrix does not match class count");

  auto t0 = std::chrono::steady_clock::now();
  PolicyModel m;
  m.format_version = kModelFormatVersion;
  m.feature_ids = train.feature_ids;
  m.label_values = train.label_values;

  m.quantizer = fit_quantizer(train, cfg.bins, cfg.binning);
  QuantizedDataset qds = quantize_dataset(train, m.quantizer);
  FeatureFilterResult filt = filter_features(qds);

  m.structure = build_structure(qds, filt.kept, cfg.structure, cfg.seed);
  std::vector<double> ami_local(m.structure.features.size());
  for (std::size_t i = 0; i < m.structure.features.size(); ++i)
    ami_local[i] = filt.ami[m.structure.features[i]];
  m.ordering = derive_ordering(m.structure, ami_local);

  Cpts cpts = estimate_cpts(qds, m.structure);
  m.tables = compute_marginal_tables(cpts, m.structure, m.ordering);
  m.priors = cpts.priors;

  if (cfg.cost_q.empty()) {
    m.costs = CostModel::zero_one(L);
  } else {
    m.costs.n_classes = L;
    m.costs.q = cfg.cost_q;
  }
  m.costs.stage_cost.resize(m.ordering.order.size());
  for (std::size_t k = 0; k < m.ordering.order.size(); ++k)
    m.costs.stage_cost[k] = cfg.cost_e_per_feature.empty()
                                ? cfg.cost_e
                                : cfg.cost_e_per_feature[m.ordering.columns[k]];
  for (double e : m.costs.stage_cost)
    if (!(e > 0)) throw std::invalid_argument("evaluation costs must be positive");
  if (timings) timings->preprocess_s = seconds_since(t0);

  auto t1 = std::chrono::steady_clock::now();
  BeliefBank bank =
      sample_beliefs(m.tables, m.priors, qds, m.ordering, cfg.beta, cfg.seed, cfg.solver);
  m.policy = solve(m.tables, m.priors, m.ordering, m.costs, bank, cfg.solver);
  if (timings) timings->train_s = seconds_since(t1);
  return m;
}

std::vector<std::size_t> missing_columns(std::size_t n_features, double missing_pct,
                                         std::uint64_t seed, std::size_t row) {
  if (missing_pct <= 0.0) return {};
  auto k = static_cast<std::size_t>(
      std::lround(missing_pct / 100.0 * static_cast<double>(n_features)));
  if (k == 0) return {};
  k = std::min(k, n_features);
  std::vector<std::size_t> cols(n_features);
  std::iota(cols.begin(), cols.end(), 0);
  std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ull * (row + 1));
  std::shuffle(cols.begin(), cols.end(), rng);
  cols.resize(k);
  return cols;
}

EvalReport evaluate(const PolicyModel& m, const LabeledDataset& test, double missing_pct,
                    std::uint64_t seed) {
  if (test.n_features != m.feature_ids.size())
    throw std::invalid_argument("test data feature count does not match the model");
  EvalReport rep;
  rep.n = test.n_instances;
  auto t0 = std::chrono::steady_clock::now();
  std::size_t total_features = 0;
  for (std::size_t i = 0; i < test.n_instances; ++i) {
    FeatureAccessor acc =
        missing_pct > 0.0
            ? masked_row_accessor(test, i, missing_columns(test.n_features, missing_pct, seed, i))
            : row_accessor(test, i);
    Decision d = classify_instance(m, acc);
    total_features += static_cast<std::size_t>(d.features_used);
    double predicted_label = m.label_values[d.predicted];
    double true_label = test.label_values[test.labels[i]];
    if (predicted_label == true_label) ++rep.correct;
  }
  rep.inference_s = seconds_since(t0);
  rep.accuracy = rep.n == 0 ? 0.0 : static_cast<double>(rep.correct) / rep.n;
  rep.avg_features = rep.n == 0 ? 0.0 : static_cast<double>(total_features) / rep.n;
  return rep;
}

const char* structure_kind_name(StructureKind kind) {
  switch (kind) {
    case StructureKind::Tree: return "tree";
    case StructureKind::Line: return "line";
    case StructureKind::Random: return "random";
    case StructureKind::Clique: return "clique";
  }
  throw std::logic_error("unknown structure kind");
}

StructureKind structure_kind_from_name(const std::string& name) {
  if (name == "tree") return StructureKind::Tree;
  if (name == "line") return StructureKind::Line;
  if (name == "random") return StructureKind::Random;
  if (name == "clique") return StructureKind::Clique;
  throw std::invalid_argument("unknown structure kind '" + name + "'");
}

const char* experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Single: return "single";
    case ExperimentKind::BinSweep: return "bin-sweep";
    case ExperimentKind::CostSweep: return "cost-sweep";
    case ExperimentKind::StructureCompare: return "structure-compare";
    case ExperimentKind::MissingRobustness: return "missing-robustness";
  }
  throw std::logic_error("unknown experiment kind");
}

ExperimentKind experiment_kind_from_name(const std::string& name) {
  if (name == "single") return ExperimentKind::Single;
  if (name == "bin-sweep") return ExperimentKind::BinSweep;
  if (name == "cost-sweep") return ExperimentKind::CostSweep;
  if (name == "structure-compare") return ExperimentKind::StructureCompare;
  if (name == "missing-robustness") return ExperimentKind::MissingRobustness;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment spec " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("experiment spec: parse error: " + std::string(e.what()));
  }

  static const std::vector<std::string> known = {
      "kind",    "data", "format",  "test_data", "folds",
      "seed",    "beta", "bins",    "binning",   "cost_e",
      "structures", "missing"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::runtime_error("experiment spec: unknown key '" + it.key() + "'");

  ExperimentSpec spec;
  if (j.contains("kind")) spec.kind = experiment_kind_from_name(j["kind"].get<std::string>());
  if (!j.contains("data")) throw std::runtime_error("experiment spec: missing 'data'");
  spec.data = j["data"].get<std::string>();
  if (j.contains("format")) {
    std::string f = j["format"].get<std::string>();
    if (f == "dense")
      spec.format = DataFormat::DenseCsv;
    else if (f == "sparse")
      spec.format = DataFormat::SparseIndexValue;
    else
      throw std::runtime_error("experiment spec: format must be 'dense' or 'sparse'");
  }
  if (j.contains("test_data")) spec.test_data = j["test_data"].get<std::string>();
  if (j.contains("folds")) spec.folds = j["folds"].get<int>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("beta")) spec.beta = j["beta"].get<std::size_t>();
  if (j.contains("bins")) spec.bins_grid = j["bins"].get<std::vector<int>>();
  if (j.contains("binning")) {
    std::string b = j["binning"].get<std::string>();
    if (b == "width")
      spec.binning = BinningRule::Width;
    else if (b == "frequency")
      spec.binning = BinningRule::Frequency;
    else
      throw std::runtime_error("experiment spec: binning must be 'width' or 'frequency'");
  }
  if (j.contains("cost_e")) spec.cost_e_grid = j["cost_e"].get<std::vector<double>>();
  if (j.contains("structures"))
    for (const auto& s : j["structures"])
      spec.structure_grid.push_back(structure_kind_from_name(s.get<std::string>()));
  if (j.contains("missing")) spec.missing_grid = j["missing"].get<std::vector<double>>();
  return spec;
}

namespace {

void fill_grid_defaults(ExperimentSpec& spec) {
  int default_bins = spec.format == DataFormat::SparseIndexValue ? 10 : 4;
  switch (spec.kind) {
    case ExperimentKind::BinSweep:
      if (spec.bins_grid.empty()) spec.bins_grid = {2, 4, 6, 8, 12};
      break;
    case ExperimentKind::CostSweep:
      if (spec.cost_e_grid.empty()) spec.cost_e_grid = {0.1, 0.01, 0.001, 0.0001};
      break;
    case ExperimentKind::StructureCompare:
      if (spec.structure_grid.empty())
        spec.structure_grid = {StructureKind::Tree, StructureKind::Line, StructureKind::Random,
                               StructureKind::Clique};
      break;
    case ExperimentKind::MissingRobustness:
      if (spec.missing_grid.empty()) spec.missing_grid = {0, 0.01, 0.1, 1, 5, 10, 25, 50};
      break;
    case ExperimentKind::Single: break;
  }
  if (spec.bins_grid.empty()) spec.bins_grid = {default_bins};
  if (spec.cost_e_grid.empty()) spec.cost_e_grid = {0.01};
  if (spec.structure_grid.empty()) spec.structure_grid = {StructureKind::Tree};
  if (spec.missing_grid.empty()) spec.missing_grid = {0.0};
}

std::string sanitize_error(std::string msg) {
  for (char& c : msg)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return msg;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v); // shortest round-trip form
  if (ec != std::errc()) throw std::logic_error("number formatting failed");
  return std::string(buf, end);
}

} // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec_in) {
  ExperimentSpec spec = spec_in;
  fill_grid_defaults(spec);

  LabeledDataset data = load_dataset(spec.data, spec.format);
  LabeledDataset holdout;
  bool use_holdout = !spec.test_data.empty();
  if (use_holdout) holdout = load_dataset(spec.test_data, spec.format);

  std::vector<FoldSplit> splits;
  if (!use_holdout) splits = kfold_split(data.n_instances, spec.folds, spec.seed);
  int n_folds = use_holdout ? 1 : spec.folds;

  std::vector<ExperimentRow> rows;
  int grid_index = 0;
  for (int bins : spec.bins_grid)
    for (double cost_e : spec.cost_e_grid)
      for (StructureKind kind : spec.structure_grid)
        for (double missing : spec.missing_grid) {
          for (int fold = 0; fold < n_folds; ++fold) {
            ExperimentRow row;
            row.grid_index = grid_index;
            row.fold = fold;
            row.bins = bins;
            row.cost_e = cost_e;
            row.structure = kind;
            row.missing_pct = missing;
            try {
              LabeledDataset train_ds, test_ds;
              if (use_holdout) {
                train_ds = data;
                test_ds = holdout;
              } else {
                train_ds = subset(data, splits[fold].train);
                test_ds = subset(data, splits[fold].test);
              }
              row.n_train = train_ds.n_instances;
              row.n_test = test_ds.n_instances;

              TrainConfig cfg;
              cfg.bins = bins;
              cfg.binning = spec.binning;
              cfg.cost_e = cost_e;
              cfg.structure = kind;
              cfg.beta = spec.beta;
              cfg.seed = spec.seed + static_cast<std::uint64_t>(fold);
              PolicyModel model = train_model(train_ds, cfg, &row.timings);
              row.kept_features = model.structure.features.size();
              row.horizon = model.ordering.order.size();
              row.report = evaluate(model, test_ds, missing, cfg.seed);
            } catch (const std::exception& e) {
              row.error = sanitize_error(e.what());
            }
            rows.push_back(std::move(row));
          }
          ++grid_index;
        }
  return rows;
}

static const char* kCsvHeader =
    "kind,grid_index,fold,bins,cost_e,structure,beta,seed,missing_pct,n_train,n_test,"
    "kept_features,horizon,accuracy,avg_features,preprocess_s,train_s,inference_s,error";

void write_results_csv(const ExperimentSpec& spec, const std::vector<ExperimentRow>& rows,
                       std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const ExperimentRow& r : rows) {
    out << experiment_kind_name(spec.kind) << ',' << r.grid_index << ',' << r.fold << ','
        << r.bins << ',' << format_double(r.cost_e) << ',' << structure_kind_name(r.structure)
        << ',' << spec.beta << ',' << spec.seed << ',' << format_double(r.missing_pct) << ',';
    if (r.error.empty()) {
      out << r.n_train << ',' << r.n_test << ',' << r.kept_features << ',' << r.horizon << ','
          << format_double(r.report.accuracy) << ',' << format_double(r.report.avg_features)
          << ',' << format_double(r.timings.preprocess_s) << ','
          << format_double(r.timings.train_s) << ',' << format_double(r.report.inference_s)
          << ',';
    } else {
      out << ",,,,,,,,"
          << ',';
    }
    out << r.error << '\n';
  }
}

std::vector<std::vector<std::string>> parse_results_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    cells.push_back(cur);
    if (rows.empty()) {
      std::string expect(kCsvHeader);
      if (line != expect) throw std::runtime_error("results CSV: unexpected header");
      expected = cells.size();
    } else if (cells.size() != expected) {
      throw std::runtime_error("results CSV: ragged row with " + std::to_string(cells.size()) +
                               " cells (header has " + std::to_string(expected) + ")");
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw std::runtime_error("results CSV: empty file");
  return rows;
}

} // namespace stopwise
