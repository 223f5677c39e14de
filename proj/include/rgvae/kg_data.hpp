#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rgvae/errors.hpp"
#include "rgvae/tensor.hpp"

namespace rgvae {

struct Triple {
    int32_t s = 0, r = 0, o = 0;
    bool operator==(const Triple&) const = default;
    auto operator<=>(const Triple&) const = default;
};

// Indexed triple sets with entity/relation vocabularies and the head/tail
// filter indexes used for filtered ranking. Immutable after load; safe to
// share across threads.
class TripleStore {
public:
    // Vocabularies cover the union of the three files in first-occurrence
    // order. final_mode=false trains on the train file and evaluates on the
    // valid file; final_mode=true trains on train+valid and evaluates on test.
    static TripleStore load(const std::string& train_path, const std::string& valid_path,
                            const std::string& test_path, bool final_mode);

    size_t num_entities() const { return entities_.size(); }
    size_t num_relations() const { return relations_.size(); }
    const std::vector<std::string>& entities() const { return entities_; }
    const std::vector<std::string>& relations() const { return relations_; }
    int32_t entity_id(const std::string& name) const;
    int32_t relation_id(const std::string& name) const;

    const std::vector<Triple>& train() const { return train_; }
    const std::vector<Triple>& valid() const { return valid_; }
    const std::vector<Triple>& test() const { return test_; }
    // Splits honoring final_mode.
    const std::vector<Triple>& training() const { return training_; }
    const std::vector<Triple>& evaluation() const { return evaluation_; }
    bool final_mode() const { return final_mode_; }
    size_t total_triples() const { return train_.size() + valid_.size() + test_.size(); }

    // True if (s,r,o) appears in any split.
    bool contains(const Triple& t) const;
    // Candidate sets from the filter indexes (sorted, nullptr when absent).
    const std::vector<int32_t>* tail_candidates(int32_t s, int32_t r) const;
    const std::vector<int32_t>* head_candidates(int32_t r, int32_t o) const;

    std::string triple_string(const Triple& t) const;
    void check_bounds(const Triple& t) const;

private:
    std::vector<std::string> entities_, relations_;
    std::unordered_map<std::string, int32_t> entity_ids_, relation_ids_;
    std::vector<Triple> train_, valid_, test_, training_, evaluation_;
    bool final_mode_ = false;
    std::unordered_map<uint64_t, std::vector<int32_t>> tail_filter_;  // (s,r) -> o set
    std::unordered_map<uint64_t, std::vector<int32_t>> head_filter_;  // (r,o) -> s set

    uint64_t sr_key(int32_t s, int32_t r) const;
    uint64_t ro_key(int32_t r, int32_t o) const;
};

// Fixed-size subgraph in the sparse G(A,E,F) representation. The one-hot
// tensors are stored compactly: edge_rel holds the relation index where an
// edge exists (-1 elsewhere), node_ent the entity index per node row.
struct SparseGraph {
    size_t n = 2;
    std::vector<uint8_t> adj;       // n*n, row-major
    std::vector<int32_t> edge_rel;  // n*n, -1 where adj == 0
    std::vector<int32_t> node_ent;  // n

    explicit SparseGraph(size_t n_nodes = 2)
        : n(n_nodes), adj(n * n, 0), edge_rel(n * n, -1), node_ent(n, 0) {}

    bool edge(size_t i, size_t j) const { return adj[i * n + j] != 0; }
    int32_t rel(size_t i, size_t j) const { return edge_rel[i * n + j]; }
    void set_edge(size_t i, size_t j, int32_t r) {
        adj[i * n + j] = 1;
        edge_rel[i * n + j] = r;
    }
    size_t edge_count() const {
        size_t c = 0;
        for (uint8_t v : adj) c += v;
        return c;
    }
    bool operator==(const SparseGraph&) const = default;
};

// One graph per triple. For a self-loop (s,r,s) only node 0 carries the edge
// and the remaining rows repeat the entity so F stays one-hot; rows without
// incident edges are ignored when converting back.
std::vector<SparseGraph> triples_to_graphs(const std::vector<Triple>& batch, size_t n,
                                           size_t d_e, size_t d_r);

std::vector<Triple> graphs_to_triples(const std::vector<SparseGraph>& batch);

// Packs several triples into one subgraph of capacity n: one node per
// distinct entity, subjects first, then unseen objects.
SparseGraph subgraph_from_triples(const std::vector<Triple>& triples, size_t n,
                                  size_t d_e, size_t d_r);

// Dense flattened [A | E | F] model input, one row per graph
// (n^2 + n^2*d_r + n*d_e columns).
Tensor graphs_to_input(const std::vector<SparseGraph>& batch, size_t d_e, size_t d_r);

// Entity-type metadata ingested from a TSV file. Unknown entities are counted
// and skipped, entities without any line map to the empty set.
class TypeCatalog {
public:
    static TypeCatalog load(const std::string& path, const TripleStore& store);

    // First non-empty path segment, e.g. "people" from "/people/measured_person".
    static std::string base_type(const std::string& type_string);

    const std::vector<std::string>& types_of(int32_t entity) const;
    bool has_base_type(int32_t entity, const std::string& key) const;
    bool has_type_substring(int32_t entity, const std::string& key) const;
    // Fraction of all entities whose base-type set contains key.
    double base_type_fraction(const std::string& key) const;
    size_t num_entities() const { return types_.size(); }
    size_t unknown_entity_count() const { return unknown_count_; }
    size_t typed_entity_count() const { return typed_count_; }

private:
    std::vector<std::vector<std::string>> types_;       // full type strings per entity
    std::vector<std::set<std::string>> base_types_;
    size_t unknown_count_ = 0;
    size_t typed_count_ = 0;
};

}  // namespace rgvae
