#pragma once

#include <cstdint>
#include <vector>

#include "rgvae/kg_data.hpp"

namespace rgvae {

// Continuous prediction batch: adjacency probabilities with edge/node
// attribute distributions, plain row-major storage.
struct PredGraphs {
    size_t batch = 0, k = 0, d_e = 0, d_r = 0;
    std::vector<double> adj;   // batch*k*k
    std::vector<double> edge;  // batch*k*k*d_r
    std::vector<double> node;  // batch*k*d_e

    PredGraphs() = default;
    PredGraphs(size_t batch_, size_t k_, size_t d_e_, size_t d_r_)
        : batch(batch_), k(k_), d_e(d_e_), d_r(d_r_),
          adj(batch * k * k, 0.0), edge(batch * k * k * d_r, 0.0),
          node(batch * k * d_e, 0.0) {}

    double a(size_t g, size_t i, size_t j) const { return adj[(g * k + i) * k + j]; }
    double e(size_t g, size_t i, size_t j, size_t l) const {
        return edge[((g * k + i) * k + j) * d_r + l];
    }
    double f(size_t g, size_t i, size_t l) const { return node[(g * k + i) * d_e + l]; }
    double& a(size_t g, size_t i, size_t j) { return adj[(g * k + i) * k + j]; }
    double& e(size_t g, size_t i, size_t j, size_t l) {
        return edge[((g * k + i) * k + j) * d_r + l];
    }
    double& f(size_t g, size_t i, size_t l) { return node[(g * k + i) * d_e + l]; }
};

// Edge affinity S_r (batch*n*n*k*k) and node affinity S_e (batch*n*k).
// S_r is zero wherever i=j or a=b.
struct AffinityPair {
    size_t batch = 0, n = 0, k = 0;
    std::vector<double> s_r;
    std::vector<double> s_e;

    double r(size_t g, size_t i, size_t j, size_t a, size_t b) const {
        return s_r[(((g * n + i) * n + j) * k + a) * k + b];
    }
    double e(size_t g, size_t i, size_t a) const { return s_e[(g * n + i) * k + a]; }
};

// Soft node correspondence, Frobenius-normalized per batch element.
struct SimilarityMatrix {
    size_t batch = 0, n = 0, k = 0;
    std::vector<double> x;             // batch*n*k, nonnegative
    std::vector<uint8_t> degenerate;   // per batch element

    double at(size_t g, size_t i, size_t a) const { return x[(g * n + i) * k + a]; }
};

// Discrete correspondence. Row i of batch element g maps target node i to
// predicted node target_to_pred[g*n+i]; each row sums to 1, each column to
// at most 1.
struct PermutationBatch {
    size_t batch = 0, n = 0, k = 0;
    std::vector<int32_t> target_to_pred;
    std::vector<uint8_t> degenerate;

    int32_t pred_of(size_t g, size_t i) const { return target_to_pred[g * n + i]; }
    double at(size_t g, size_t i, size_t a) const {
        return target_to_pred[g * n + i] == static_cast<int32_t>(a) ? 1.0 : 0.0;
    }
    bool is_identity(size_t g) const {
        for (size_t i = 0; i < n; ++i)
            if (target_to_pred[g * n + i] != static_cast<int32_t>(i)) return false;
        return true;
    }
};

// Batched edge/node affinities between discrete targets and continuous
// predictions. Diagonals of A, the predicted adjacency and the edge slices
// are excluded from the first term; the node term reads the predicted
// diagonal as-is.
AffinityPair affinity_batch(const std::vector<SparseGraph>& target, const PredGraphs& pred);

// Max-pool power iteration on the affinities. All-zero affinity flags the
// element degenerate and leaves its similarity uniform.
SimilarityMatrix maxpool_similarity(const AffinityPair& aff, int iterations = 40);

// Minimum-cost row-to-column assignment (n_rows <= n_cols, finite costs).
// Among equal-cost optima the lexicographically smallest column sequence is
// returned.
std::vector<int32_t> hungarian_assign(const std::vector<double>& cost, size_t n_rows,
                                      size_t n_cols);

// Hungarian assignment on cost 1 - X*, per batch element. Degenerate
// elements fall back to the identity correspondence.
PermutationBatch discretize(const SimilarityMatrix& sim);

// Applies a square correspondence to one batch element: the target adjacency
// is carried into prediction node order, the predicted attribute tensors into
// target node order. out_* buffers are sized by the caller:
// adj n*n, edge n*n*d_r, node n*d_e.
void apply_permutation(const PermutationBatch& perm, size_t g,
                       const std::vector<double>& target_adj,
                       const std::vector<double>& pred_edge,
                       const std::vector<double>& pred_node, size_t d_e, size_t d_r,
                       std::vector<double>& out_adj, std::vector<double>& out_edge,
                       std::vector<double>& out_node);

// Fraction of batch elements whose correspondence differs from the identity.
double permutation_rate(const PermutationBatch& perm);

}  // namespace rgvae
