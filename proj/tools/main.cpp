// Command-line front end: train, predict, evaluate, experiment, oracle-check.
// Exit codes: 0 success, 1 usage error, 2 data/model error.

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stopwise/harness.hpp"
#include "stopwise/model_io.hpp"

namespace {

using namespace stopwise;

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

DataFormat parse_format(const std::string& s) {
  if (s == "dense") return DataFormat::DenseCsv;
  if (s == "sparse") return DataFormat::SparseIndexValue;
  throw CLI::ValidationError("--format", "must be 'dense' or 'sparse'");
}

int default_bins(DataFormat f) { return f == DataFormat::SparseIndexValue ? 10 : 4; }

/// --cost-e accepts a scalar or a path to a file with one cost per feature.
void parse_cost_e(const std::string& arg, TrainConfig& cfg) {
  char* end = nullptr;
  double v = std::strtod(arg.c_str(), &end);
  if (end && *end == '\0' && !arg.empty()) {
    cfg.cost_e = v;
    return;
  }
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open per-feature cost file " + arg);
  double x;
  while (in >> x) cfg.cost_e_per_feature.push_back(x);
  if (cfg.cost_e_per_feature.empty())
    throw std::runtime_error("per-feature cost file " + arg + " holds no numbers");
}

/// --cost-q accepts "zero-one" or a path to an L x L whitespace matrix.
void parse_cost_q(const std::string& arg, TrainConfig& cfg) {
  if (arg == "zero-one") return; // the default
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open cost matrix file " + arg);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<double> row;
    double x;
    while (ss >> x) row.push_back(x);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("cost matrix file " + arg + " is empty");
  for (const auto& r : rows)
    if (r.size() != rows.size())
      throw std::runtime_error("cost matrix in " + arg + " is not square");
  for (const auto& r : rows) cfg.cost_q.insert(cfg.cost_q.end(), r.begin(), r.end());
}

struct CommonTrainArgs {
  std::string data, format = "dense", cost_e = "0.01", cost_q = "zero-one";
  std::string structure = "tree";
  std::string binning = "width";
  int bins = 0; // 0 = format default
  std::size_t beta = 100;
  std::uint64_t seed = 0;
  bool randomized = false;
  std::size_t context_cap = 4096;

  void attach(CLI::App& cmd, bool need_data = true) {
    auto* d = cmd.add_option("--data", data, "dataset path");
    if (need_data) d->required();
    cmd.add_option("--format", format, "dense|sparse (default dense)");
    cmd.add_option("--bins", bins, "quantizer bins (default 4 dense / 10 sparse)");
    cmd.add_option("--binning", binning, "cut placement: width|frequency (default width)");
    cmd.add_option("--cost-e", cost_e, "evaluation cost: scalar or per-feature file");
    cmd.add_option("--cost-q", cost_q, "misclassification costs: 'zero-one' or matrix file");
    cmd.add_option("--structure", structure, "tree|line|random|clique (default tree)");
    cmd.add_option("--beta", beta, "belief bank size per stage (default 100)");
    cmd.add_option("--seed", seed, "seed for all randomness");
    cmd.add_flag("--randomized", randomized, "randomized point selection in the solver");
    cmd.add_option("--context-cap", context_cap, "per-stage context keyspace bound");
  }

  TrainConfig config() const {
    TrainConfig cfg;
    cfg.bins = bins > 0 ? bins : default_bins(parse_format(format));
    if (binning == "frequency")
      cfg.binning = BinningRule::Frequency;
    else if (binning != "width")
      throw CLI::ValidationError("--binning", "must be 'width' or 'frequency'");
    parse_cost_e(cost_e, cfg);
    parse_cost_q(cost_q, cfg);
    cfg.structure = structure_kind_from_name(structure);
    cfg.beta = beta;
    cfg.seed = seed;
    cfg.solver.randomized = randomized;
    cfg.solver.context_cap = context_cap;
    return cfg;
  }
};

void print_trace(std::ostream& out, const PolicyModel& m, const Decision& d) {
  for (const TraceStep& s : d.trace) {
    out << ' ' << m.feature_ids[s.feature] << '=';
    if (s.bin < 0)
      out << '?';
    else
      out << s.bin;
    out << '[';
    for (std::size_t c = 0; c < s.posterior.size(); ++c) {
      if (c) out << ';';
      out << fmt(s.posterior[c]);
    }
    out << ']';
  }
}

int cmd_train(const CommonTrainArgs& args, const std::string& out_path) {
  LabeledDataset ds = load_dataset(args.data, parse_format(args.format));
  TrainTimings t;
  PolicyModel m = train_model(ds, args.config(), &t);
  save_model(m, out_path);
  std::cout << "trained on " << ds.n_instances << " instances: kept "
            << m.structure.features.size() << "/" << ds.n_features << " features, horizon "
            << m.ordering.order.size() << ", preprocess " << fmt(t.preprocess_s) << "s, train "
            << fmt(t.train_s) << "s -> " << out_path << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data,
                const std::string& format, bool trace, const std::string& out_path) {
  PolicyModel m = load_model(model_path);
  LabeledDataset ds = load_dataset(data, parse_format(format));
  if (ds.n_features != m.feature_ids.size())
    throw std::runtime_error("dataset feature count does not match the model");
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    out = &file;
  }
  for (std::size_t i = 0; i < ds.n_instances; ++i) {
    Decision d = classify_instance(m, row_accessor(ds, i));
    *out << fmt(m.label_values[d.predicted]) << '\t' << d.features_used;
    if (trace) print_trace(*out, m, d);
    *out << '\n';
  }
  return 0;
}

int cmd_evaluate(const CommonTrainArgs& args, const std::string& model_path, int folds,
                 double missing_pct) {
  LabeledDataset ds = load_dataset(args.data, parse_format(args.format));
  if (!model_path.empty()) {
    PolicyModel m = load_model(model_path);
    EvalReport r = evaluate(m, ds, missing_pct, args.seed);
    std::cout << "n=" << r.n << " accuracy=" << fmt(r.accuracy)
              << " avg_features=" << fmt(r.avg_features) << " inference_s="
              << fmt(r.inference_s) << '\n';
    return 0;
  }
  std::vector<FoldSplit> splits = kfold_split(ds.n_instances, folds, args.seed);
  double acc = 0, feats = 0;
  for (int f = 0; f < folds; ++f) {
    LabeledDataset tr = subset(ds, splits[f].train);
    LabeledDataset te = subset(ds, splits[f].test);
    TrainConfig cfg = args.config();
    cfg.seed = args.seed + static_cast<std::uint64_t>(f);
    TrainTimings t;
    PolicyModel m = train_model(tr, cfg, &t);
    EvalReport r = evaluate(m, te, missing_pct, cfg.seed);
    std::cout << "fold " << f << ": n=" << r.n << " accuracy=" << fmt(r.accuracy)
              << " avg_features=" << fmt(r.avg_features) << " preprocess_s="
              << fmt(t.preprocess_s) << " train_s=" << fmt(t.train_s) << " inference_s="
              << fmt(r.inference_s) << '\n';
    acc += r.accuracy;
    feats += r.avg_features;
  }
  std::cout << "mean: accuracy=" << fmt(acc / folds) << " avg_features=" << fmt(feats / folds)
            << '\n';
  return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& out_path) {
  ExperimentSpec spec = load_experiment_spec(spec_path);
  std::vector<ExperimentRow> rows = run_experiment(spec);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_results_csv(spec, rows, out);
  std::size_t failed = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) ++failed;
  std::cout << rows.size() << " rows (" << failed << " failed) -> " << out_path << '\n';
  return 0;
}

int cmd_oracle_check(int trials, std::uint64_t seed) {
  OracleCheckReport rep = oracle_check(trials, seed);
  std::cout << "trials=" << rep.trials << " max_value_gap=" << fmt(rep.max_value_gap)
            << " max_policy_gap=" << fmt(rep.max_policy_gap) << " failures=" << rep.failures
            << '\n';
  return rep.failures == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance-wise sequential classifier with optimal stopping"};
  app.require_subcommand(1);

  CommonTrainArgs train_args;
  std::string train_out;
  CLI::App* train = app.add_subcommand("train", "fit a model and write it to disk");
  train_args.attach(*train);
  train->add_option("--out", train_out, "model output path")->required();

  std::string pr_model, pr_data, pr_format = "dense", pr_out;
  bool pr_trace = false;
  CLI::App* predict = app.add_subcommand("predict", "classify instances with a trained model");
  predict->add_option("--model", pr_model, "model path")->required();
  predict->add_option("--data", pr_data, "dataset path")->required();
  predict->add_option("--format", pr_format, "dense|sparse");
  predict->add_flag("--trace", pr_trace, "append the per-step decision trace");
  predict->add_option("--out", pr_out, "write predictions here instead of stdout");

  CommonTrainArgs eval_args;
  std::string ev_model;
  int ev_folds = 5;
  double ev_missing = 0.0;
  CLI::App* eval = app.add_subcommand(
      "evaluate", "cross-validate on a dataset, or score an existing model with --model");
  eval_args.attach(*eval);
  eval->add_option("--model", ev_model, "evaluate this model instead of cross-validating");
  eval->add_option("--folds", ev_folds, "cross-validation folds (default 5)");
  eval->add_option("--missing-pct", ev_missing, "hide this percent of each instance's features");

  std::string ex_spec, ex_out;
  CLI::App* experiment = app.add_subcommand("experiment", "run a sweep from a JSON spec");
  experiment->add_option("--spec", ex_spec, "experiment spec path (JSON)")->required();
  experiment->add_option("--out", ex_out, "results CSV path")->required();

  int oc_trials = 200;
  std::uint64_t oc_seed = 1;
  CLI::App* oracle = app.add_subcommand(
      "oracle-check", "compare the solver against exhaustive enumeration on random problems");
  oracle->add_option("--trials", oc_trials, "number of random problems (default 200)");
  oracle->add_option("--seed", oc_seed, "base seed");

  try {
    app.parse(argc, argv);
    if (*train) return cmd_train(train_args, train_out);
    if (*predict) return cmd_predict(pr_model, pr_data, pr_format, pr_trace, pr_out);
    if (*eval) return cmd_evaluate(eval_args, ev_model, ev_folds, ev_missing);
    if (*experiment) return cmd_experiment(ex_spec, ex_out);
    if (*oracle) return cmd_oracle_check(oc_trials, oc_seed);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
