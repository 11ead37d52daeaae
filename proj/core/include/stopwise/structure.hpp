#pragma once

#include <cstdint>
#include <vector>

#include "stopwise/dataset.hpp"

namespace stopwise {

enum class StructureKind { Tree, Line, Random, Clique };

/// Local node index meaning "the class variable" in graph queries.
inline constexpr int kClassNode = -1;

/// Directed acyclic dependency graph over the kept features plus the class.
/// The class is implicitly a parent of every feature and is referred to by
/// kClassNode; feature nodes use local indices into `features`.
struct DependencyStructure {
  StructureKind kind = StructureKind::Tree;
  std::uint64_t seed = 0;                 // meaningful for Random
  std::vector<std::size_t> features;      // global dataset columns
  std::vector<std::vector<int>> parents;  // feature-parents per node (local, sorted)
  std::vector<std::vector<int>> children; // feature-children per node (local, sorted)
  // Single feature-parent used for conditioning (second-order restriction):
  // the tree parent (Tree), the predecessor (Line/Clique), or the
  // latest-in-topological-order parent (Random). -1 when the node has none.
  std::vector<int> designated_parent;

  std::size_t size() const { return features.size(); }
};

/// Build one of the four structure kinds over the kept features.
/// Tree: maximum spanning tree under class-conditional MI edge weights,
/// rooted at the highest-AMI feature with edges directed away from the root.
/// Line/Clique: deterministic from the AMI-descending feature order.
/// Random: seeded random topological order with up to two random
/// feature-parents per node.
DependencyStructure build_structure(const QuantizedDataset& qds,
                                    const std::vector<std::size_t>& kept, StructureKind kind,
                                    std::uint64_t seed);

/// Markov blanket of a node: parents, children, and co-parents of children.
/// `node` is a local feature index or kClassNode. The result may contain
/// kClassNode (always first) followed by ascending feature indices; the node
/// itself is never included.
std::vector<int> markov_blanket(const DependencyStructure& g, int node);

/// Feature evaluation order with first-ancestor links.
struct FeatureOrdering {
  std::vector<int> order;              // local feature indices; position k holds F_{k+1}
  std::vector<std::size_t> columns;    // the same positions as global dataset columns
  std::vector<int> ancestor_pos;       // per position: earlier position of the nearest
                                       // designated-parent-chain ancestor, or -1
};

/// Greedy Markov-blanket ordering: repeatedly pick the highest-AMI candidate,
/// then drop it and its blanket from the candidate pool. The resulting length
/// is the effective decision horizon. AMI ties break toward the smaller
/// global feature id.
FeatureOrdering derive_ordering(const DependencyStructure& g, const std::vector<double>& ami);

/// Smoothed conditional probability tables plus class priors.
struct Cpts {
  struct Table {
    int parent = -1;     // local feature index or -1
    int child_bins = 0;
    int parent_bins = 1; // 1 when parent == -1
    int n_classes = 0;
    std::vector<double> p; // [child_bin][parent_bin][class]

    double at(int v, int u, int c) const {
      return p[(static_cast<std::size_t>(v) * parent_bins + u) * n_classes + c];
    }
  };
  std::vector<Table> tables;  // per local feature
  std::vector<double> priors; // length n_classes, sums to 1
};

/// Add-one smoothed MLE of P(feature | designated parent, class) for every
/// feature, plus unsmoothed empirical class priors. Throws if any class has
/// zero training instances.
Cpts estimate_cpts(const QuantizedDataset& qds, const DependencyStructure& g);

/// Per-stage observation model P(F_k | F_{a(k)}, C), with a class-only
/// fallback P(F_k | C) for use when the ancestor value is unavailable.
struct MarginalTable {
  int stage = 0;          // 0-based position in the ordering
  int feature = -1;       // local feature index
  int ancestor_stage = -1;
  int bins = 0;
  int ancestor_bins = 1; // 1 when ancestor_stage == -1
  int n_classes = 0;
  std::vector<double> p;          // [v][u][c]
  std::vector<double> class_only; // [v][c]

  double at(int v, int u, int c) const {
    return p[(static_cast<std::size_t>(v) * ancestor_bins + u) * n_classes + c];
  }
  double class_at(int v, int c) const {
    return class_only[static_cast<std::size_t>(v) * n_classes + c];
  }

  /// Per-class likelihood of observing bin v given ancestor bin u; pass
  /// u < 0 (or have no ancestor) to get the class-only fallback column.
  std::vector<double> column(int v, int u) const {
    std::vector<double> out(n_classes);
    if (ancestor_stage != -1 && u >= 0)
      for (int c = 0; c < n_classes; ++c) out[c] = at(v, u, c);
    else
      for (int c = 0; c < n_classes; ++c) out[c] = class_at(v, c);
    return out;
  }
};

/// Chain-multiply CPTs along the designated-parent path to express each
/// stage's feature conditioned on its first ancestor (or on the class alone),
/// renormalizing each slice. All entries are strictly positive.
std::vector<MarginalTable> compute_marginal_tables(const Cpts& cpts,
                                                   const DependencyStructure& g,
                                                   const FeatureOrdering& ord);

} // namespace stopwise
