#include "dfdrnn/graph.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

namespace dfdrnn {

std::size_t HeteroAdjacency::edge_count() const {
  std::size_t e = 0;
  for (const auto& row : neighbors) e += row.size();
  return e;
}

bool HeteroAdjacency::contains(std::size_t i, std::size_t j) const {
  const auto& row = neighbors[i];
  return std::binary_search(row.begin(), row.end(), j);
}

NeighborGraph topt_binarize(const Tensor& sim, std::size_t t) {
  if (t < 1) throw ConfigError("top-t must be at least 1");
  if (sim.rows() != sim.cols()) throw ShapeError("top-t needs a square similarity matrix");
  const std::size_t size = sim.rows();
  if (size > 0 && t >= size) {
    std::cerr << "warning: top-t " << t << " >= " << size << " nodes; keeping all neighbors\n";
  }
  NeighborGraph g;
  g.size = size;
  g.neighbors.resize(size);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < size; ++i) {
    order.clear();
    for (std::size_t j = 0; j < size; ++j)
      if (j != i) order.push_back(j);
    const std::size_t keep = std::min(t, order.size());
    // Larger similarity first, then smaller index.
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double sa = sim(i, a);
                        const double sb = sim(i, b);
                        return sa != sb ? sa > sb : a < b;
                      });
    auto& row = g.neighbors[i];
    row.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    row.push_back(i);
    std::sort(row.begin(), row.end());
  }
  return g;
}

NeighborGraph topt_binarize(const SimilarityMatrix& sim, std::size_t t) {
  return topt_binarize(sim.values, t);
}

HeteroAdjacency build_hetero_similarity(const NeighborGraph& drugs, const NeighborGraph& diseases) {
  HeteroAdjacency g;
  g.n = drugs.size;
  g.m = diseases.size;
  g.kind = EdgeKind::kSimilarity;
  g.neighbors.resize(g.n + g.m);
  for (std::size_t i = 0; i < g.n; ++i) g.neighbors[i] = drugs.neighbors[i];
  for (std::size_t j = 0; j < g.m; ++j) {
    auto& row = g.neighbors[g.n + j];
    for (std::size_t q : diseases.neighbors[j]) row.push_back(g.n + q);
  }
  return g;
}

HeteroAdjacency build_hetero_association(const Tensor& assoc, const PairSet& mask_out) {
  HeteroAdjacency g;
  g.n = assoc.rows();
  g.m = assoc.cols();
  g.kind = EdgeKind::kAssociation;
  g.neighbors.resize(g.n + g.m);
  for (const auto& [i, j] : mask_out) {
    if (i >= g.n || j >= g.m) throw ShapeError("masked pair out of range");
  }
  // Drug rows fill in disease order and disease rows in drug order, so both
  // stay sorted.
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.m; ++j) {
      if (assoc(i, j) == 0.0 || mask_out.contains({i, j})) continue;
      g.neighbors[i].push_back(g.n + j);
      g.neighbors[g.n + j].push_back(i);
    }
  }
  return g;
}

HeteroAdjacency build_hetero_association(const AssociationMatrix& assoc, const PairSet& mask_out) {
  return build_hetero_association(assoc.values, mask_out);
}

InitialFeatures initial_features(const Dataset& d, const PairSet& mask_out) {
  const std::size_t n = d.drugs();
  const std::size_t m = d.diseases();
  InitialFeatures f{Tensor(n + m, n + m), Tensor(n + m, n + m)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) f.h_init_s(i, j) = d.drug_sim.values(i, j);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) f.h_init_s(n + i, n + j) = d.disease_sim.values(i, j);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double a = d.assoc.values(i, j);
      if (a != 0.0 && mask_out.contains({i, j})) a = 0.0;
      f.h_init_a(i, n + j) = a;
      f.h_init_a(n + j, i) = a;
    }
  }
  return f;
}

HeteroAdjacency edge_dropout(const HeteroAdjacency& graph, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("edge dropout rate must be in [0,1)");
  if (rate == 0.0) return graph;
  HeteroAdjacency out = graph;
  for (auto& row : out.neighbors) row.clear();
  const double keep = 1.0 - rate;
  if (graph.kind == EdgeKind::kAssociation) {
    // One draw per undirected drug-disease edge, visited from the drug side.
    for (std::size_t i = 0; i < graph.n; ++i) {
      for (std::size_t j : graph.neighbors[i]) {
        if (uniform01(rng) < keep) {
          out.neighbors[i].push_back(j);
          out.neighbors[j].push_back(i);
        }
      }
    }
    for (std::size_t v = graph.n; v < graph.nodes(); ++v) {
      std::sort(out.neighbors[v].begin(), out.neighbors[v].end());
    }
  } else {
    for (std::size_t i = 0; i < graph.nodes(); ++i) {
      for (std::size_t j : graph.neighbors[i]) {
        if (j == i || uniform01(rng) < keep) out.neighbors[i].push_back(j);
      }
    }
  }
  return out;
}

Csr to_csr(const std::vector<std::vector<std::size_t>>& neighbors) {
  Csr g;
  g.nodes = neighbors.size();
  g.offsets.assign(g.nodes + 1, 0);
  for (std::size_t i = 0; i < g.nodes; ++i) g.offsets[i + 1] = g.offsets[i] + neighbors[i].size();
  g.cols.reserve(g.offsets.back());
  g.rows.reserve(g.offsets.back());
  for (std::size_t i = 0; i < g.nodes; ++i) {
    for (std::size_t j : neighbors[i]) {
      if (j >= g.nodes) throw ShapeError("neighbor index out of range");
      g.cols.push_back(j);
      g.rows.push_back(i);
    }
  }
  // Reverse index: edges grouped by column, ascending edge id within a group.
  g.rev_offsets.assign(g.nodes + 1, 0);
  for (std::size_t c : g.cols) ++g.rev_offsets[c + 1];
  std::partial_sum(g.rev_offsets.begin(), g.rev_offsets.end(), g.rev_offsets.begin());
  g.rev_edges.resize(g.cols.size());
  std::vector<std::size_t> cursor(g.rev_offsets.begin(), g.rev_offsets.end() - 1);
  for (std::size_t e = 0; e < g.cols.size(); ++e) g.rev_edges[cursor[g.cols[e]]++] = e;
  return g;
}

Csr to_csr(const HeteroAdjacency& graph) { return to_csr(graph.neighbors); }

}  // namespace dfdrnn
