#include "stopwise/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stopwise {

ContingencyCounts ContingencyCounts::from_counts(std::size_t rows, std::size_t cols,
                                                 std::vector<double> joint) {
  if (joint.size() != rows * cols) throw std::invalid_argument("joint table size mismatch");
  ContingencyCounts c;
  c.rows = rows;
  c.cols = cols;
  c.joint = std::move(joint);
  c.row_marginal.assign(rows, 0.0);
  c.col_marginal.assign(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < cols; ++k) {
      double v = c.joint[r * cols + k];
      c.row_marginal[r] += v;
      c.col_marginal[k] += v;
      c.total += v;
    }
  return c;
}

ContingencyCounts ContingencyCounts::from_pairs(const std::vector<int>& x,
                                                const std::vector<int>& y, int x_levels,
                                                int y_levels) {
  if (x.size() != y.size()) throw std::invalid_argument("vector length mismatch");
  std::vector<double> joint(static_cast<std::size_t>(x_levels) * y_levels, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || x[i] >= x_levels || y[i] < 0 || y[i] >= y_levels)
      throw std::out_of_range("symbol outside declared level range");
    joint[static_cast<std::size_t>(x[i]) * y_levels + y[i]] += 1.0;
  }
  return from_counts(x_levels, y_levels, std::move(joint));
}

double mutual_information(const ContingencyCounts& c) {
  if (c.total <= 0) throw std::invalid_argument("empty contingency table");
  double mi = 0.0;
  for (std::size_t r = 0; r < c.rows; ++r) {
    double a = c.row_marginal[r];
    if (a == 0) continue;
    for (std::size_t k = 0; k < c.cols; ++k) {
      double nij = c.at(r, k);
      if (nij == 0) continue;
      double b = c.col_marginal[k];
      mi += (nij / c.total) * std::log(nij * c.total / (a * b));
    }
  }
  return mi;
}

double entropy_from_counts(const std::vector<double>& counts, double total) {
  if (total <= 0) throw std::invalid_argument("entropy of empty distribution");
  double h = 0.0;
  for (double n : counts) {
    if (n == 0) continue;
    double p = n / total;
    h -= p * std::log(p);
  }
  return h;
}

double expected_mutual_information(const ContingencyCounts& c) {
  // Expectation of plug-in MI when the joint table is drawn uniformly from
  // all tables with the observed marginals (hypergeometric model). Factorials
  // go through lgamma to stay in range.
  double n = c.total;
  double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (std::size_t r = 0; r < c.rows; ++r) {
    double a = c.row_marginal[r];
    if (a == 0) continue;
    for (std::size_t k = 0; k < c.cols; ++k) {
      double b = c.col_marginal[k];
      if (b == 0) continue;
      double lo = std::max(1.0, a + b - n);
      double hi = std::min(a, b);
      double lg_fixed = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::lgamma(n - a + 1.0) +
                        std::lgamma(n - b + 1.0) - lg_n;
      for (double nij = lo; nij <= hi; nij += 1.0) {
        double log_term = std::log(n * nij / (a * b));
        double lg_prob = lg_fixed - std::lgamma(nij + 1.0) - std::lgamma(a - nij + 1.0) -
                         std::lgamma(b - nij + 1.0) - std::lgamma(n - a - b + nij + 1.0);
        emi += (nij / n) * log_term * std::exp(lg_prob);
      }
    }
  }
  return emi;
}

double adjusted_mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vector length mismatch");
  if (x.empty()) throw std::invalid_argument("empty vectors");
  int xl = *std::max_element(x.begin(), x.end()) + 1;
  int yl = *std::max_element(y.begin(), y.end()) + 1;
  ContingencyCounts c = ContingencyCounts::from_pairs(x, y, xl, yl);

  double hx = entropy_from_counts(c.row_marginal, c.total);
  double hy = entropy_from_counts(c.col_marginal, c.total);
  if (hx == 0.0 || hy == 0.0) return 0.0; // constant variable: degenerate convention

  double mi = mutual_information(c);
  double emi = expected_mutual_information(c);
  double denom = 0.5 * (hx + hy) - emi;
  double num = mi - emi;
  if (std::abs(denom) < 1e-15) return 0.0;
  return num / denom;
}

double conditional_mutual_information(const std::vector<int>& a, const std::vector<int>& b,
                                      const std::vector<int>& cls) {
  if (a.size() != b.size() || a.size() != cls.size())
    throw std::invalid_argument("vector length mismatch");
  if (a.empty()) throw std::invalid_argument("empty vectors");
  int al = *std::max_element(a.begin(), a.end()) + 1;
  int bl = *std::max_element(b.begin(), b.end()) + 1;
  int cl = *std::max_element(cls.begin(), cls.end()) + 1;

  double n = static_cast<double>(a.size());
  double cmi = 0.0;
  for (int c = 0; c < cl; ++c) {
    std::vector<int> ac, bc;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (cls[i] == c) {
        ac.push_back(a[i]);
        bc.push_back(b[i]);
      }
    if (ac.empty()) continue;
    ContingencyCounts t = ContingencyCounts::from_pairs(ac, bc, al, bl);
    cmi += (static_cast<double>(ac.size()) / n) * mutual_information(t);
  }
  return cmi;
}

FeatureFilterResult filter_features(std::vector<double> ami) {
  FeatureFilterResult out;
  out.ami = std::move(ami);
  std::size_t n = out.ami.size();

  constexpr double kEtaFloor = 1.0 / (1 << 20);
  double eta = 1.0;
  std::vector<std::size_t> kept;
  while (true) {
    kept.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (out.ami[j] >= eta) kept.push_back(j);
    if (!kept.empty()) break;
    eta *= 0.5;
    if (eta < kEtaFloor) {
      for (std::size_t j = 0; j < n; ++j)
        if (out.ami[j] > 0) kept.push_back(j);
      if (kept.empty())
        for (std::size_t j = 0; j < n; ++j) kept.push_back(j);
      break;
    }
  }
  std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    if (out.ami[a] != out.ami[b]) return out.ami[a] > out.ami[b];
    return a < b;
  });
  out.kept = std::move(kept);
  out.eta = eta;
  return out;
}

FeatureFilterResult filter_features(const QuantizedDataset& qds) {
  if (qds.n_instances == 0) throw std::invalid_argument("empty dataset");
  std::vector<double> ami(qds.n_features);
  std::vector<int> col(qds.n_instances);
  for (std::size_t j = 0; j < qds.n_features; ++j) {
    for (std::size_t i = 0; i < qds.n_instances; ++i) col[i] = qds.at(i, j);
    ami[j] = adjusted_mutual_information(col, qds.labels);
  }
  return filter_features(std::move(ami));
}

} // namespace stopwise
