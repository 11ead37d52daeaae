#include "stopwise/structure.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "stopwise/infotheory.hpp"

namespace stopwise {

namespace {

std::vector<int> column(const QuantizedDataset& qds, std::size_t j) {
  std::vector<int> out(qds.n_instances);
  for (std::size_t i = 0; i < qds.n_instances; ++i) out[i] = qds.at(i, j);
  return out;
}

std::vector<double> kept_ami(const QuantizedDataset& qds, const std::vector<std::size_t>& kept) {
  std::vector<double> ami(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    ami[i] = adjusted_mutual_information(column(qds, kept[i]), qds.labels);
  return ami;
}

/// Local indices sorted by (AMI desc, global id asc).
std::vector<int> ami_order(const DependencyStructure& g, const std::vector<double>& ami) {
  std::vector<int> idx(g.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (ami[a] != ami[b]) return ami[a] > ami[b];
    return g.features[a] < g.features[b];
  });
  return idx;
}

void add_edge(DependencyStructure& g, int from, int to) {
  g.children[from].push_back(to);
  g.parents[to].push_back(from);
}

struct UnionFind {
  std::vector<int> up;
  explicit UnionFind(int n) : up(n) { std::iota(up.begin(), up.end(), 0); }
  int find(int x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    up[a] = b;
    return true;
  }
};

void build_tree(DependencyStructure& g, const QuantizedDataset& qds,
                const std::vector<double>& ami) {
  int m = static_cast<int>(g.size());
  if (m == 1) return;

  struct Edge {
    int a, b;
    double w;
  };
  std::vector<std::vector<int>> cols(m);
  for (int i = 0; i < m; ++i) cols[i] = column(qds, g.features[i]);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      edges.push_back({a, b, conditional_mutual_information(cols[a], cols[b], qds.labels)});
  std::sort(edges.begin(), edges.end(), [&](const Edge& x, const Edge& y) {
    if (x.w != y.w) return x.w > y.w;
    auto xa = std::minmax(g.features[x.a], g.features[x.b]);
    auto ya = std::minmax(g.features[y.a], g.features[y.b]);
    return xa < ya;
  });

  std::vector<std::vector<int>> adj(m); // undirected spanning tree
  UnionFind uf(m);
  int taken = 0;
  for (const Edge& e : edges) {
    if (!uf.unite(e.a, e.b)) continue;
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
    if (++taken == m - 1) break;
  }

  int root = ami_order(g, ami).front();
  // Direct edges away from the root, breadth first.
  std::vector<int> queue{root}, parent(m, -2);
  parent[root] = -1;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    int x = queue[h];
    for (int y : adj[x])
      if (parent[y] == -2) {
        parent[y] = x;
        add_edge(g, x, y);
        g.designated_parent[y] = x;
        queue.push_back(y);
      }
  }
}

void build_line(DependencyStructure& g, const std::vector<double>& ami) {
  std::vector<int> order = ami_order(g, ami);
  for (std::size_t t = 1; t < order.size(); ++t) {
    add_edge(g, order[t - 1], order[t]);
    g.designated_parent[order[t]] = order[t - 1];
  }
}

void build_clique(DependencyStructure& g, const std::vector<double>& ami) {
  std::vector<int> order = ami_order(g, ami);
  for (std::size_t t = 0; t < order.size(); ++t)
    for (std::size_t s = t + 1; s < order.size(); ++s) add_edge(g, order[t], order[s]);
  for (std::size_t t = 1; t < order.size(); ++t)
    g.designated_parent[order[t]] = order[t - 1];
}

void build_random(DependencyStructure& g, std::uint64_t seed) {
  int m = static_cast<int>(g.size());
  std::mt19937_64 rng(seed);
  std::vector<int> topo(m);
  std::iota(topo.begin(), topo.end(), 0);
  std::shuffle(topo.begin(), topo.end(), rng);

  for (int j = 1; j < m; ++j) {
    int max_parents = std::min(2, j);
    int n_parents = std::uniform_int_distribution<int>(0, max_parents)(rng);
    std::vector<int> pool(topo.begin(), topo.begin() + j); // earlier in topo order
    std::shuffle(pool.begin(), pool.end(), rng);
    int best_pos = -1;
    for (int t = 0; t < n_parents; ++t) {
      add_edge(g, pool[t], topo[j]);
      int pos = static_cast<int>(std::find(topo.begin(), topo.end(), pool[t]) - topo.begin());
      if (pos > best_pos) {
        best_pos = pos;
        g.designated_parent[topo[j]] = pool[t];
      }
    }
  }
}

} // namespace

DependencyStructure build_structure(const QuantizedDataset& qds,
                                    const std::vector<std::size_t>& kept, StructureKind kind,
                                    std::uint64_t seed) {
  if (kept.empty()) throw std::invalid_argument("build_structure: no features kept");
  DependencyStructure g;
  g.kind = kind;
  g.seed = seed;
  g.features = kept;
  g.parents.assign(kept.size(), {});
  g.children.assign(kept.size(), {});
  g.designated_parent.assign(kept.size(), -1);

  switch (kind) {
    case StructureKind::Tree: build_tree(g, qds, kept_ami(qds, kept)); break;
    case StructureKind::Line: build_line(g, kept_ami(qds, kept)); break;
    case StructureKind::Clique: build_clique(g, kept_ami(qds, kept)); break;
    case StructureKind::Random: build_random(g, seed); break;
  }
  for (auto& v : g.parents) std::sort(v.begin(), v.end());
  for (auto& v : g.children) std::sort(v.begin(), v.end());
  return g;
}

std::vector<int> markov_blanket(const DependencyStructure& g, int node) {
  int m = static_cast<int>(g.size());
  if (node != kClassNode && (node < 0 || node >= m))
    throw std::out_of_range("markov_blanket: unknown node");

  std::set<int> blanket;
  if (node == kClassNode) {
    // The class is a parent of every feature; each feature is a child and all
    // feature-parents of those children are already features.
    for (int i = 0; i < m; ++i) blanket.insert(i);
  } else {
    blanket.insert(kClassNode); // class is a parent of every feature
    for (int p : g.parents[node]) blanket.insert(p);
    for (int ch : g.children[node]) {
      blanket.insert(ch);
      for (int cp : g.parents[ch])
        if (cp != node) blanket.insert(cp);
      // the class co-parents every child, but it is already in the set
    }
  }
  return {blanket.begin(), blanket.end()}; // kClassNode (-1) sorts first
}

FeatureOrdering derive_ordering(const DependencyStructure& g, const std::vector<double>& ami) {
  if (ami.size() != g.size())
    throw std::invalid_argument("derive_ordering: score vector does not match graph");
  int m = static_cast<int>(g.size());
  std::vector<bool> available(m, true);
  FeatureOrdering ord;

  while (true) {
    int pick = -1;
    for (int i = 0; i < m; ++i) {
      if (!available[i]) continue;
      if (pick == -1 || ami[i] > ami[pick] ||
          (ami[i] == ami[pick] && g.features[i] < g.features[pick]))
        pick = i;
    }
    if (pick == -1) break;
    ord.order.push_back(pick);
    available[pick] = false;
    for (int b : markov_blanket(g, pick))
      if (b != kClassNode) available[b] = false;
  }

  ord.columns.resize(ord.order.size());
  for (std::size_t k = 0; k < ord.order.size(); ++k) ord.columns[k] = g.features[ord.order[k]];

  std::vector<int> pos(m, -1);
  for (std::size_t k = 0; k < ord.order.size(); ++k) pos[ord.order[k]] = static_cast<int>(k);
  ord.ancestor_pos.assign(ord.order.size(), -1);
  for (std::size_t k = 0; k < ord.order.size(); ++k) {
    for (int y = g.designated_parent[ord.order[k]]; y != -1; y = g.designated_parent[y]) {
      if (pos[y] != -1 && pos[y] < static_cast<int>(k)) {
        ord.ancestor_pos[k] = pos[y];
        break;
      }
    }
  }
  return ord;
}

Cpts estimate_cpts(const QuantizedDataset& qds, const DependencyStructure& g) {
  int L = qds.n_classes;
  int V = qds.bins;
  std::vector<double> class_counts(L, 0.0);
  for (int c : qds.labels) class_counts[c] += 1.0;
  for (int c = 0; c < L; ++c)
    if (class_counts[c] == 0)
      throw std::invalid_argument("estimate_cpts: class " + std::to_string(c) +
                                  " has no training instances");

  Cpts out;
  out.priors.resize(L);
  for (int c = 0; c < L; ++c) out.priors[c] = class_counts[c] / qds.n_instances;

  out.tables.resize(g.size());
  for (std::size_t f = 0; f < g.size(); ++f) {
    Cpts::Table& t = out.tables[f];
    t.parent = g.designated_parent[f];
    t.child_bins = V;
    t.parent_bins = t.parent == -1 ? 1 : V;
    t.n_classes = L;

    std::vector<double> counts(static_cast<std::size_t>(V) * t.parent_bins * L, 0.0);
    std::vector<double> cond_totals(static_cast<std::size_t>(t.parent_bins) * L, 0.0);
    std::size_t col = g.features[f];
    std::size_t pcol = t.parent == -1 ? 0 : g.features[t.parent];
    for (std::size_t i = 0; i < qds.n_instances; ++i) {
      int v = qds.at(i, col);
      int u = t.parent == -1 ? 0 : qds.at(i, pcol);
      int c = qds.labels[i];
      counts[(static_cast<std::size_t>(v) * t.parent_bins + u) * L + c] += 1.0;
      cond_totals[static_cast<std::size_t>(u) * L + c] += 1.0;
    }
    t.p.resize(counts.size());
    for (int v = 0; v < V; ++v)
      for (int u = 0; u < t.parent_bins; ++u)
        for (int c = 0; c < L; ++c) {
          std::size_t idx = (static_cast<std::size_t>(v) * t.parent_bins + u) * L + c;
          t.p[idx] = (counts[idx] + 1.0) / (cond_totals[static_cast<std::size_t>(u) * L + c] + V);
        }
  }
  return out;
}

namespace {

/// Multiply dist (over the parent variable, per class) down one CPT edge.
std::vector<double> push_down(const Cpts::Table& t, const std::vector<double>& dist, int L) {
  std::vector<double> out(static_cast<std::size_t>(t.child_bins) * L, 0.0);
  for (int v = 0; v < t.child_bins; ++v)
    for (int u = 0; u < t.parent_bins; ++u)
      for (int c = 0; c < L; ++c)
        out[static_cast<std::size_t>(v) * L + c] +=
            t.at(v, u, c) * dist[static_cast<std::size_t>(u) * L + c];
  return out;
}

/// Descending designated-parent chain from `from` down to `to` (exclusive of
/// `from`), i.e. the nodes whose CPTs must be applied in order.
std::vector<int> chain_down(const DependencyStructure& g, int from, int to) {
  std::vector<int> up; // to ... from walking upward
  int y = to;
  while (y != -1 && y != from) {
    up.push_back(y);
    y = g.designated_parent[y];
  }
  if (y != from) throw std::invalid_argument("marginal tables: ordering/graph mismatch");
  std::reverse(up.begin(), up.end());
  return up;
}

void normalize_slices(std::vector<double>& p, int bins, int u_count, int L) {
  for (int u = 0; u < u_count; ++u)
    for (int c = 0; c < L; ++c) {
      double s = 0.0;
      for (int v = 0; v < bins; ++v) s += p[(static_cast<std::size_t>(v) * u_count + u) * L + c];
      for (int v = 0; v < bins; ++v) p[(static_cast<std::size_t>(v) * u_count + u) * L + c] /= s;
    }
}

} // namespace

std::vector<MarginalTable> compute_marginal_tables(const Cpts& cpts, const DependencyStructure& g,
                                                   const FeatureOrdering& ord) {
  if (cpts.tables.size() != g.size())
    throw std::invalid_argument("marginal tables: CPT/graph mismatch");
  int L = static_cast<int>(cpts.priors.size());

  std::vector<MarginalTable> out(ord.order.size());
  for (std::size_t k = 0; k < ord.order.size(); ++k) {
    int f = ord.order[k];
    int a = ord.ancestor_pos[k];
    MarginalTable& t = out[k];
    t.stage = static_cast<int>(k);
    t.feature = f;
    t.ancestor_stage = a;
    t.bins = cpts.tables[f].child_bins;
    t.n_classes = L;

    // Class-only fallback: walk to the root of f's designated-parent tree,
    // take the root CPT, and push down the chain.
    int root = f;
    while (g.designated_parent[root] != -1) root = g.designated_parent[root];
    std::vector<double> dist(cpts.tables[root].p); // P(root | c), parent_bins == 1
    for (int y : chain_down(g, root, f)) dist = push_down(cpts.tables[y], dist, L);
    normalize_slices(dist, t.bins, 1, L);
    t.class_only = dist;

    if (a == -1) {
      t.ancestor_bins = 1;
      t.p = t.class_only;
    } else {
      int anc = ord.order[a];
      int V_a = cpts.tables[anc].child_bins;
      t.ancestor_bins = V_a;
      // Chain-multiply CPTs along anc -> ... -> f; M[v][u][c] starts as the
      // identity in (v, u) and picks up one CPT per chain node.
      std::vector<double> m(static_cast<std::size_t>(V_a) * V_a * L, 0.0);
      for (int u = 0; u < V_a; ++u)
        for (int c = 0; c < L; ++c) m[(static_cast<std::size_t>(u) * V_a + u) * L + c] = 1.0;
      int cur_bins = V_a;
      for (int y : chain_down(g, anc, f)) {
        const Cpts::Table& ct = cpts.tables[y];
        std::vector<double> next(static_cast<std::size_t>(ct.child_bins) * V_a * L, 0.0);
        for (int v = 0; v < ct.child_bins; ++v)
          for (int x = 0; x < cur_bins; ++x)
            for (int u = 0; u < V_a; ++u)
              for (int c = 0; c < L; ++c)
                next[(static_cast<std::size_t>(v) * V_a + u) * L + c] +=
                    ct.at(v, x, c) * m[(static_cast<std::size_t>(x) * V_a + u) * L + c];
        m = std::move(next);
        cur_bins = ct.child_bins;
      }
      normalize_slices(m, t.bins, V_a, L);
      t.p = std::move(m);
    }
  }
  return out;
}

} // namespace stopwise
