#include "rgvae/graph_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rgvae {

AffinityPair affinity_batch(const std::vector<SparseGraph>& target, const PredGraphs& pred) {
    if (target.size() != pred.batch)
        throw shape_error("target batch " + std::to_string(target.size()) +
                          " vs prediction batch " + std::to_string(pred.batch));
    size_t batch = pred.batch, k = pred.k;
    size_t n = target.empty() ? 0 : target[0].n;
    for (const SparseGraph& g : target)
        if (g.n != n) throw shape_error("mixed node counts in target batch");

    AffinityPair aff;
    aff.batch = batch;
    aff.n = n;
    aff.k = k;
    aff.s_r.assign(batch * n * n * k * k, 0.0);
    aff.s_e.assign(batch * n * k, 0.0);

    for (size_t g = 0; g < batch; ++g) {
        const SparseGraph& t = target[g];
        // Edge term over target edges only: the one-hot edge attribute makes
        // <E[i,j,.], E~[a,b,.]> a single lookup. Diagonals excluded.
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                if (i == j || !t.edge(i, j)) continue;
                size_t l = static_cast<size_t>(t.rel(i, j));
                if (l >= pred.d_r) throw shape_error("edge attribute index outside d_r");
                for (size_t a = 0; a < k; ++a)
                    for (size_t b = 0; b < k; ++b) {
                        if (a == b) continue;
                        double v = pred.e(g, a, b, l) * pred.a(g, a, b) *
                                   pred.a(g, a, a) * pred.a(g, b, b);
                        aff.s_r[(((g * n + i) * n + j) * k + a) * k + b] = v;
                    }
            }
        // Node term: one-hot F row picks a single prediction column.
        for (size_t i = 0; i < n; ++i) {
            size_t l = static_cast<size_t>(t.node_ent[i]);
            if (l >= pred.d_e) throw shape_error("node attribute index outside d_e");
            for (size_t a = 0; a < k; ++a)
                aff.s_e[(g * n + i) * k + a] = pred.f(g, a, l) * pred.a(g, a, a);
        }
    }
    return aff;
}

SimilarityMatrix maxpool_similarity(const AffinityPair& aff, int iterations) {
    if (iterations < 1) throw contract_error("maxpool needs at least one iteration");
    size_t batch = aff.batch, n = aff.n, k = aff.k;
    SimilarityMatrix sim;
    sim.batch = batch;
    sim.n = n;
    sim.k = k;
    sim.x.assign(batch * n * k, 1.0);
    sim.degenerate.assign(batch, 0);

    std::vector<double> next(n * k);
    double uniform = 1.0 / std::sqrt(static_cast<double>(n * k));
    for (size_t g = 0; g < batch; ++g) {
        double* x = sim.x.data() + g * n * k;
        bool dead = false;
        for (int it = 0; it < iterations && !dead; ++it) {
            for (size_t i = 0; i < n; ++i)
                for (size_t a = 0; a < k; ++a) {
                    double v = x[i * k + a] * aff.e(g, i, a);
                    for (size_t j = 0; j < n; ++j) {
                        double best = 0.0;
                        const double* srow =
                            aff.s_r.data() + (((g * n + i) * n + j) * k + a) * k;
                        for (size_t b = 0; b < k; ++b)
                            best = std::max(best, x[j * k + b] * srow[b]);
                        v += best;
                    }
                    next[i * k + a] = v;
                }
            double norm = 0.0;
            for (double v : next) norm += v * v;
            norm = std::sqrt(norm);
            if (norm < 1e-30) {
                // Annihilated signal: leave the similarity uniform.
                sim.degenerate[g] = 1;
                for (size_t c = 0; c < n * k; ++c) x[c] = uniform;
                dead = true;
                break;
            }
            for (size_t c = 0; c < n * k; ++c) x[c] = next[c] / norm;
        }
    }
    return sim;
}

namespace {

// Shortest-augmenting-path assignment with potentials, O(n^2 k).
// Returns row -> column and the optimal total cost.
std::pair<std::vector<int32_t>, double> assign_min_cost(const std::vector<double>& cost,
                                                        size_t n, size_t k) {
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(k + 1, 0.0);
    std::vector<int32_t> way(k + 1, 0), col_row(k + 1, -1);
    for (size_t i = 1; i <= n; ++i) {
        col_row[0] = static_cast<int32_t>(i);
        size_t j0 = 0;
        std::vector<double> minv(k + 1, INF);
        std::vector<char> used(k + 1, 0);
        do {
            used[j0] = 1;
            size_t i0 = static_cast<size_t>(col_row[j0]), j1 = 0;
            double delta = INF;
            for (size_t j = 1; j <= k; ++j) {
                if (used[j]) continue;
                double cur = cost[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = static_cast<int32_t>(j0);
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (size_t j = 0; j <= k; ++j) {
                if (used[j]) {
                    u[static_cast<size_t>(col_row[j])] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_row[j0] != -1);
        do {
            size_t j1 = static_cast<size_t>(way[j0]);
            col_row[j0] = col_row[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int32_t> row_col(n, -1);
    double total = 0.0;
    for (size_t j = 1; j <= k; ++j)
        if (col_row[j] > 0) {
            row_col[static_cast<size_t>(col_row[j]) - 1] = static_cast<int32_t>(j) - 1;
            total += cost[(static_cast<size_t>(col_row[j]) - 1) * k + (j - 1)];
        }
    return {std::move(row_col), total};
}

}  // namespace

std::vector<int32_t> hungarian_assign(const std::vector<double>& cost, size_t n_rows,
                                      size_t n_cols) {
    if (n_rows == 0 || n_rows > n_cols)
        throw contract_error("assignment needs 0 < rows <= cols");
    if (cost.size() != n_rows * n_cols) throw shape_error("cost matrix size mismatch");
    for (double c : cost)
        if (!std::isfinite(c)) throw contract_error("non-finite assignment cost");

    auto [assignment, best] = assign_min_cost(cost, n_rows, n_cols);

    // Tie-break: fix rows in order to the smallest column that still allows
    // an optimal completion, yielding the lexicographically smallest column
    // sequence among optima. The comparison is exact: an approximate one
    // would erase real cost differences far smaller than the totals. When
    // rounding in the re-summed totals blocks every column of some row, the
    // raw optimal assignment stands.
    std::vector<int32_t> fixed(n_rows, -1);
    std::vector<char> col_taken(n_cols, 0);
    double fixed_cost = 0.0;
    for (size_t r = 0; r < n_rows; ++r) {
        size_t rows_left = n_rows - r - 1;
        for (size_t c = 0; c < n_cols; ++c) {
            if (col_taken[c]) continue;
            double cand = fixed_cost + cost[r * n_cols + c];
            double rest = 0.0;
            if (rows_left > 0) {
                // Optimal completion over the remaining rows and columns.
                std::vector<size_t> cols_left;
                for (size_t cc = 0; cc < n_cols; ++cc)
                    if (!col_taken[cc] && cc != c) cols_left.push_back(cc);
                std::vector<double> sub(rows_left * cols_left.size());
                for (size_t rr = 0; rr < rows_left; ++rr)
                    for (size_t cc = 0; cc < cols_left.size(); ++cc)
                        sub[rr * cols_left.size() + cc] =
                            cost[(r + 1 + rr) * n_cols + cols_left[cc]];
                rest = assign_min_cost(sub, rows_left, cols_left.size()).second;
            }
            if (cand + rest <= best) {
                fixed[r] = static_cast<int32_t>(c);
                col_taken[c] = 1;
                fixed_cost = cand;
                break;
            }
        }
        if (fixed[r] < 0) return assignment;
    }
    return fixed;
}

PermutationBatch discretize(const SimilarityMatrix& sim) {
    PermutationBatch perm;
    perm.batch = sim.batch;
    perm.n = sim.n;
    perm.k = sim.k;
    perm.target_to_pred.assign(sim.batch * sim.n, 0);
    perm.degenerate = sim.degenerate;
    std::vector<double> cost(sim.n * sim.k);
    for (size_t g = 0; g < sim.batch; ++g) {
        if (sim.degenerate[g]) {
            for (size_t i = 0; i < sim.n; ++i)
                perm.target_to_pred[g * sim.n + i] = static_cast<int32_t>(i);
            continue;
        }
        // Minimizing 1 - X* and minimizing -X* select the same assignments
        // (every row contributes exactly one entry), but the negated form
        // keeps similarities far below 1 ulp from being absorbed into the
        // constant.
        for (size_t c = 0; c < sim.n * sim.k; ++c) cost[c] = -sim.x[g * sim.n * sim.k + c];
        auto assignment = hungarian_assign(cost, sim.n, sim.k);
        std::copy(assignment.begin(), assignment.end(),
                  perm.target_to_pred.begin() + static_cast<long>(g * sim.n));
    }
    return perm;
}

void apply_permutation(const PermutationBatch& perm, size_t g,
                       const std::vector<double>& target_adj,
                       const std::vector<double>& pred_edge,
                       const std::vector<double>& pred_node, size_t d_e, size_t d_r,
                       std::vector<double>& out_adj, std::vector<double>& out_edge,
                       std::vector<double>& out_node) {
    size_t n = perm.n, k = perm.k;
    if (n != k) throw contract_error("apply_permutation needs a square correspondence");
    if (target_adj.size() != n * n || pred_edge.size() != k * k * d_r ||
        pred_node.size() != k * d_e)
        throw shape_error("apply_permutation input sizes");
    const int32_t* p = perm.target_to_pred.data() + g * n;
    std::vector<int32_t> inv(n, -1);
    for (size_t i = 0; i < n; ++i) inv[static_cast<size_t>(p[i])] = static_cast<int32_t>(i);

    out_adj.assign(n * n, 0.0);
    out_edge.assign(k * k * d_r, 0.0);
    out_node.assign(k * d_e, 0.0);
    // A' = X^T A X: target adjacency at prediction node order.
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b)
            out_adj[a * n + b] =
                target_adj[static_cast<size_t>(inv[a]) * n + static_cast<size_t>(inv[b])];
    // F~' = X F~ and E~' = X E~ X^T: predicted attributes at target node order.
    for (size_t i = 0; i < n; ++i) {
        size_t a = static_cast<size_t>(p[i]);
        std::copy(pred_node.begin() + static_cast<long>(a * d_e),
                  pred_node.begin() + static_cast<long>((a + 1) * d_e),
                  out_node.begin() + static_cast<long>(i * d_e));
    }
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            size_t a = static_cast<size_t>(p[i]), b = static_cast<size_t>(p[j]);
            std::copy(pred_edge.begin() + static_cast<long>((a * k + b) * d_r),
                      pred_edge.begin() + static_cast<long>((a * k + b + 1) * d_r),
                      out_edge.begin() + static_cast<long>((i * n + j) * d_r));
        }
}

double permutation_rate(const PermutationBatch& perm) {
    if (perm.batch == 0) return 0.0;
    size_t moved = 0;
    for (size_t g = 0; g < perm.batch; ++g)
        if (!perm.is_identity(g)) ++moved;
    return static_cast<double>(moved) / static_cast<double>(perm.batch);
}

}  // namespace rgvae
