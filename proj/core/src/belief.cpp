#include "stopwise/belief.hpp"

#include <stdexcept>

namespace stopwise {

CostModel CostModel::zero_one(int n_classes) {
  CostModel cm;
  cm.n_classes = n_classes;
  cm.q.assign(static_cast<std::size_t>(n_classes) * n_classes, 1.0);
  for (int i = 0; i < n_classes; ++i) cm.q[static_cast<std::size_t>(i) * n_classes + i] = 0.0;
  return cm;
}

Belief update_belief(const Belief& b, const std::vector<double>& likelihood) {
  if (b.size() != likelihood.size()) throw std::invalid_argument("belief/likelihood size mismatch");
  Belief out(b.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    out[i] = b[i] * likelihood[i];
    denom += out[i];
  }
  if (denom <= 0.0) throw std::runtime_error("belief update: zero evidence probability");
  for (double& v : out) v /= denom;
  return out;
}

double stop_cost(const Belief& b, const CostModel& cm) {
  double best = 0.0;
  for (int j = 0; j < cm.n_classes; ++j) {
    double cost = 0.0;
    for (int i = 0; i < cm.n_classes; ++i) cost += cm.q_at(i, j) * b[i];
    if (j == 0 || cost < best) best = cost;
  }
  return best;
}

int classify(const Belief& b, const CostModel& cm) {
  int arg = 0;
  double best = 0.0;
  for (int j = 0; j < cm.n_classes; ++j) {
    double cost = 0.0;
    for (int i = 0; i < cm.n_classes; ++i) cost += cm.q_at(i, j) * b[i];
    if (j == 0 || cost < best) {
      best = cost;
      arg = j;
    }
  }
  return arg;
}

} // namespace stopwise
