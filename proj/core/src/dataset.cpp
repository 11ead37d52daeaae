#include "stopwise/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace stopwise {

namespace {

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size()) fail(path, line, "trailing characters in number '" + tok + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(path, line, "not a number: '" + tok + "'");
  } catch (const std::out_of_range&) {
    fail(path, line, "number out of range: '" + tok + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

void remap_labels(LabeledDataset& ds, const std::vector<double>& raw_labels) {
  std::vector<double> distinct(raw_labels);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<double, int> to_class;
  for (std::size_t c = 0; c < distinct.size(); ++c) to_class[distinct[c]] = static_cast<int>(c);
  ds.label_values = distinct;
  ds.n_classes = static_cast<int>(distinct.size());
  ds.labels.resize(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size(); ++i) ds.labels[i] = to_class.at(raw_labels[i]);
}

LabeledDataset load_dense_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  std::ptrdiff_t label_col = -1;
  std::vector<std::string> feature_ids;
  for (std::size_t j = 0; j < header.size(); ++j) {
    std::string name = trim(header[j]);
    if (name == "label") {
      if (label_col >= 0) fail(path, lineno, "duplicate 'label' column");
      label_col = static_cast<std::ptrdiff_t>(j);
    } else {
      feature_ids.push_back(name);
    }
  }
  if (label_col < 0) fail(path, lineno, "no 'label' column in header");

  LabeledDataset ds;
  ds.feature_ids = feature_ids;
  ds.n_features = feature_ids.size();
  std::vector<double> raw_labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> toks = split_csv_line(line);
    if (toks.size() != header.size())
      fail(path, lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(toks.size()));
    for (std::size_t j = 0; j < toks.size(); ++j) {
      double v = parse_double(trim(toks[j]), path, lineno);
      if (static_cast<std::ptrdiff_t>(j) == label_col)
        raw_labels.push_back(v);
      else
        ds.values.push_back(v);
    }
    ++ds.n_instances;
  }
  if (ds.n_instances == 0) throw std::runtime_error(path + ": no data rows");
  remap_labels(ds, raw_labels);
  return ds;
}

LabeledDataset load_sparse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;

  std::vector<double> raw_labels;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    raw_labels.push_back(parse_double(tok, path, lineno));
    std::vector<std::pair<std::size_t, double>> row;
    while (ss >> tok) {
      std::size_t colon = tok.find(':');
      if (colon == std::string::npos) fail(path, lineno, "expected idx:val, got '" + tok + "'");
      std::size_t idx = 0;
      const char* b = tok.data();
      auto [p, ec] = std::from_chars(b, b + colon, idx);
      if (ec != std::errc() || p != b + colon || idx == 0)
        fail(path, lineno, "bad feature index in '" + tok + "' (indices are 1-based)");
      double v = parse_double(tok.substr(colon + 1), path, lineno);
      row.emplace_back(idx - 1, v);
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  LabeledDataset ds;
  ds.n_instances = rows.size();
  ds.n_features = max_index;
  ds.values.assign(ds.n_instances * ds.n_features, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto& [j, v] : rows[i]) ds.values[i * ds.n_features + j] = v;
  ds.feature_ids.resize(ds.n_features);
  for (std::size_t j = 0; j < ds.n_features; ++j) ds.feature_ids[j] = "f" + std::to_string(j + 1);
  remap_labels(ds, raw_labels);
  return ds;
}

} // namespace

LabeledDataset load_dataset(const std::string& path, DataFormat format) {
  return format == DataFormat::DenseCsv ? load_dense_csv(path) : load_sparse(path);
}

int Quantizer::quantize(std::size_t feature, double value) const {
  const FeatureCuts& f = features[feature];
  if (f.degenerate) return 0;
  // Bin index = number of cuts <= value, so a value sitting exactly on a cut
  // lands in the upper bin and out-of-range values clamp to 0 / bins-1.
  auto it = std::upper_bound(f.cuts.begin(), f.cuts.end(), value);
  return static_cast<int>(it - f.cuts.begin());
}

Quantizer fit_quantizer(const LabeledDataset& train, int bins, BinningRule rule) {
  if (bins < 2) throw std::invalid_argument("quantizer needs at least 2 bins");
  if (train.n_instances == 0) throw std::invalid_argument("cannot fit quantizer on empty data");
  Quantizer q;
  q.bins = bins;
  q.features.resize(train.n_features);
  std::vector<double> col(train.n_instances);
  for (std::size_t j = 0; j < train.n_features; ++j) {
    for (std::size_t i = 0; i < train.n_instances; ++i) col[i] = train.at(i, j);
    Quantizer::FeatureCuts& f = q.features[j];
    if (rule == BinningRule::Width) {
      auto [lo_it, hi_it] = std::minmax_element(col.begin(), col.end());
      double lo = *lo_it, hi = *hi_it;
      if (lo == hi) {
        f.degenerate = true;
        continue;
      }
      f.cuts.resize(static_cast<std::size_t>(bins) - 1);
      double width = (hi - lo) / bins;
      for (int t = 1; t < bins; ++t) f.cuts[static_cast<std::size_t>(t) - 1] = lo + width * t;
    } else {
      std::sort(col.begin(), col.end());
      // Cut at each i/bins order statistic; drop duplicates and cuts at the
      // minimum so every retained cut separates a non-empty lower bin.
      for (int t = 1; t < bins; ++t) {
        double c = col[col.size() * static_cast<std::size_t>(t) / static_cast<std::size_t>(bins)];
        if (c > col.front() && (f.cuts.empty() || c > f.cuts.back())) f.cuts.push_back(c);
      }
      f.degenerate = f.cuts.empty();
    }
  }
  return q;
}

QuantizedDataset quantize_dataset(const LabeledDataset& ds, const Quantizer& q) {
  if (q.features.size() != ds.n_features)
    throw std::invalid_argument("quantizer feature count does not match dataset");
  QuantizedDataset out;
  out.n_instances = ds.n_instances;
  out.n_features = ds.n_features;
  out.n_classes = ds.n_classes;
  out.bins = q.bins;
  out.labels = ds.labels;
  out.feature_ids = ds.feature_ids;
  out.label_values = ds.label_values;
  out.cells.resize(ds.n_instances * ds.n_features);
  for (std::size_t i = 0; i < ds.n_instances; ++i)
    for (std::size_t j = 0; j < ds.n_features; ++j)
      out.cells[i * ds.n_features + j] = q.quantize(j, ds.at(i, j));
  return out;
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& indices) {
  LabeledDataset out;
  out.n_instances = indices.size();
  out.n_features = ds.n_features;
  out.feature_ids = ds.feature_ids;
  out.values.reserve(indices.size() * ds.n_features);
  std::vector<double> raw_labels;
  raw_labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= ds.n_instances) throw std::out_of_range("subset index past end of dataset");
    raw_labels.push_back(ds.label_values[ds.labels[i]]);
    out.values.insert(out.values.end(), ds.values.begin() + i * ds.n_features,
                      ds.values.begin() + (i + 1) * ds.n_features);
  }
  remap_labels(out, raw_labels);
  return out;
}

std::vector<FoldSplit> kfold_split(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("kfold_split needs at least 2 folds");
  if (static_cast<std::size_t>(folds) > n)
    throw std::invalid_argument("kfold_split: more folds than instances");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<FoldSplit> out(folds);
  std::size_t base = n / folds, extra = n % folds, pos = 0;
  for (int f = 0; f < folds; ++f) {
    std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    out[f].test.assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  for (int f = 0; f < folds; ++f) {
    for (int g = 0; g < folds; ++g)
      if (g != f)
        out[f].train.insert(out[f].train.end(), out[g].test.begin(), out[g].test.end());
    std::sort(out[f].train.begin(), out[f].train.end());
    std::sort(out[f].test.begin(), out[f].test.end());
  }
  return out;
}

} // namespace stopwise
