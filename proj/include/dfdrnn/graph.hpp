#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "dfdrnn/dataset.hpp"
#include "dfdrnn/rng.hpp"
#include "dfdrnn/tensor.hpp"

namespace dfdrnn {

// Binarized top-t neighborhoods (rows of R or D). Row i is sorted ascending.
struct NeighborGraph {
  std::size_t size = 0;
  std::vector<std::vector<std::size_t>> neighbors;
};

enum class EdgeKind { kSimilarity, kAssociation };

// Block adjacency over n drugs followed by m diseases. Each row holds the
// neighbor indices of one node, sorted ascending.
struct HeteroAdjacency {
  std::size_t n = 0;
  std::size_t m = 0;
  EdgeKind kind = EdgeKind::kSimilarity;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t nodes() const { return n + m; }
  std::size_t edge_count() const;
  bool contains(std::size_t i, std::size_t j) const;
};

// (drug, disease) index pairs.
using PairSet = std::set<std::pair<std::size_t, std::size_t>>;

struct InitialFeatures {
  Tensor h_init_s;
  Tensor h_init_a;
};

// Keeps node i plus its t most similar other nodes. Ties prefer the smaller
// index. When t >= size every node is kept and a warning goes to stderr.
NeighborGraph topt_binarize(const SimilarityMatrix& sim, std::size_t t);
NeighborGraph topt_binarize(const Tensor& sim, std::size_t t);

HeteroAdjacency build_hetero_similarity(const NeighborGraph& drugs, const NeighborGraph& diseases);

// Drug i <-> disease n+j whenever A(i,j) = 1 and (i,j) is not masked.
HeteroAdjacency build_hetero_association(const AssociationMatrix& assoc,
                                         const PairSet& mask_out = {});
HeteroAdjacency build_hetero_association(const Tensor& assoc, const PairSet& mask_out = {});

// h_init_s = blockdiag(S^r, S^d); h_init_a = [[0, A'], [A'^T, 0]] where A' is
// A with the masked pairs zeroed.
InitialFeatures initial_features(const Dataset& d, const PairSet& mask_out = {});

// Association edges drop as undirected pairs; similarity entries drop one
// direction at a time and self-loops always survive.
HeteroAdjacency edge_dropout(const HeteroAdjacency& graph, double rate, Rng& rng);

// Compressed sparse rows for attention kernels, with a reverse index so
// column-wise reductions can run without write conflicts.
struct Csr {
  std::size_t nodes = 0;
  std::vector<std::size_t> offsets;      // nodes + 1
  std::vector<std::size_t> cols;         // edge -> target column
  std::vector<std::size_t> rows;         // edge -> source row
  std::vector<std::size_t> rev_offsets;  // nodes + 1, grouped by column
  std::vector<std::size_t> rev_edges;    // edge ids grouped by column

  std::size_t edges() const { return cols.size(); }
  std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};

Csr to_csr(const HeteroAdjacency& graph);
Csr to_csr(const std::vector<std::vector<std::size_t>>& neighbors);

}  // namespace dfdrnn
