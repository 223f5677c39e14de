#include "rgvae/kg_data.hpp"

#include <algorithm>
#include <fstream>

namespace rgvae {

namespace {

struct RawTriple {
    std::string s, r, o;
};

std::vector<RawTriple> read_tsv_triples(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open dataset file " + path);
    std::vector<RawTriple> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        size_t t3 = t2 == std::string::npos ? std::string::npos : line.find('\t', t2 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || t3 != std::string::npos)
            throw parse_error(path + ":" + std::to_string(line_no) +
                              ": expected 3 tab-separated fields");
        out.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                       line.substr(t2 + 1)});
    }
    if (out.empty()) throw data_error("empty dataset file " + path);
    return out;
}

void sort_unique(std::vector<int32_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

bool sorted_contains(const std::vector<int32_t>& v, int32_t x) {
    return std::binary_search(v.begin(), v.end(), x);
}

}  // namespace

uint64_t TripleStore::sr_key(int32_t s, int32_t r) const {
    return static_cast<uint64_t>(s) * num_relations() + static_cast<uint64_t>(r);
}

uint64_t TripleStore::ro_key(int32_t r, int32_t o) const {
    return static_cast<uint64_t>(r) * num_entities() + static_cast<uint64_t>(o);
}

TripleStore TripleStore::load(const std::string& train_path, const std::string& valid_path,
                              const std::string& test_path, bool final_mode) {
    auto raw_train = read_tsv_triples(train_path);
    auto raw_valid = read_tsv_triples(valid_path);
    auto raw_test = read_tsv_triples(test_path);

    TripleStore st;
    st.final_mode_ = final_mode;
    auto intern = [](std::vector<std::string>& vocab,
                     std::unordered_map<std::string, int32_t>& ids,
                     const std::string& name) -> int32_t {
        auto it = ids.find(name);
        if (it != ids.end()) return it->second;
        int32_t id = static_cast<int32_t>(vocab.size());
        vocab.push_back(name);
        ids.emplace(name, id);
        return id;
    };
    auto index_split = [&](const std::vector<RawTriple>& raw) {
        std::vector<Triple> out;
        out.reserve(raw.size());
        for (const auto& t : raw)
            out.push_back({intern(st.entities_, st.entity_ids_, t.s),
                           intern(st.relations_, st.relation_ids_, t.r),
                           intern(st.entities_, st.entity_ids_, t.o)});
        return out;
    };
    st.train_ = index_split(raw_train);
    st.valid_ = index_split(raw_valid);
    st.test_ = index_split(raw_test);

    if (final_mode) {
        st.training_ = st.train_;
        st.training_.insert(st.training_.end(), st.valid_.begin(), st.valid_.end());
        st.evaluation_ = st.test_;
    } else {
        st.training_ = st.train_;
        st.evaluation_ = st.valid_;
    }

    // Filter indexes cover all three files.
    for (const auto* split : {&st.train_, &st.valid_, &st.test_})
        for (const Triple& t : *split) {
            st.tail_filter_[st.sr_key(t.s, t.r)].push_back(t.o);
            st.head_filter_[st.ro_key(t.r, t.o)].push_back(t.s);
        }
    for (auto& [k, v] : st.tail_filter_) sort_unique(v);
    for (auto& [k, v] : st.head_filter_) sort_unique(v);
    return st;
}

int32_t TripleStore::entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    return it == entity_ids_.end() ? -1 : it->second;
}

int32_t TripleStore::relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    return it == relation_ids_.end() ? -1 : it->second;
}

bool TripleStore::contains(const Triple& t) const {
    auto it = tail_filter_.find(sr_key(t.s, t.r));
    return it != tail_filter_.end() && sorted_contains(it->second, t.o);
}

const std::vector<int32_t>* TripleStore::tail_candidates(int32_t s, int32_t r) const {
    auto it = tail_filter_.find(sr_key(s, r));
    return it == tail_filter_.end() ? nullptr : &it->second;
}

const std::vector<int32_t>* TripleStore::head_candidates(int32_t r, int32_t o) const {
    auto it = head_filter_.find(ro_key(r, o));
    return it == head_filter_.end() ? nullptr : &it->second;
}

std::string TripleStore::triple_string(const Triple& t) const {
    check_bounds(t);
    return entities_[t.s] + "\t" + relations_[t.r] + "\t" + entities_[t.o];
}

void TripleStore::check_bounds(const Triple& t) const {
    if (t.s < 0 || static_cast<size_t>(t.s) >= num_entities() || t.o < 0 ||
        static_cast<size_t>(t.o) >= num_entities() || t.r < 0 ||
        static_cast<size_t>(t.r) >= num_relations())
        throw bounds_error("triple (" + std::to_string(t.s) + "," + std::to_string(t.r) +
                           "," + std::to_string(t.o) + ") outside vocabulary");
}

namespace {

void check_triple_bounds(const Triple& t, size_t d_e, size_t d_r) {
    if (t.s < 0 || static_cast<size_t>(t.s) >= d_e || t.o < 0 ||
        static_cast<size_t>(t.o) >= d_e || t.r < 0 || static_cast<size_t>(t.r) >= d_r)
        throw bounds_error("triple index out of range");
}

}  // namespace

std::vector<SparseGraph> triples_to_graphs(const std::vector<Triple>& batch, size_t n,
                                           size_t d_e, size_t d_r) {
    if (n < 2) throw contract_error("graphs need at least 2 nodes");
    std::vector<SparseGraph> out;
    out.reserve(batch.size());
    for (const Triple& t : batch) {
        check_triple_bounds(t, d_e, d_r);
        SparseGraph g(n);
        if (t.s == t.o) {
            g.set_edge(0, 0, t.r);
            for (size_t i = 0; i < n; ++i) g.node_ent[i] = t.s;
        } else {
            g.set_edge(0, 1, t.r);
            g.node_ent[0] = t.s;
            g.node_ent[1] = t.o;
            for (size_t i = 2; i < n; ++i) g.node_ent[i] = t.o;
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<Triple> graphs_to_triples(const std::vector<SparseGraph>& batch) {
    std::vector<Triple> out;
    for (const SparseGraph& g : batch)
        for (size_t i = 0; i < g.n; ++i)
            for (size_t j = 0; j < g.n; ++j)
                if (g.edge(i, j))
                    out.push_back({g.node_ent[i], g.rel(i, j), g.node_ent[j]});
    return out;
}

SparseGraph subgraph_from_triples(const std::vector<Triple>& triples, size_t n,
                                  size_t d_e, size_t d_r) {
    // One node per distinct entity: subjects first, then unseen objects.
    std::vector<int32_t> nodes;
    auto node_of = [&](int32_t e) -> int32_t {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i] == e) return static_cast<int32_t>(i);
        nodes.push_back(e);
        return static_cast<int32_t>(nodes.size() - 1);
    };
    for (const Triple& t : triples) {
        check_triple_bounds(t, d_e, d_r);
        node_of(t.s);
    }
    for (const Triple& t : triples) node_of(t.o);
    if (nodes.size() > n)
        throw contract_error("subgraph capacity " + std::to_string(n) + " exceeded by " +
                             std::to_string(nodes.size()) + " distinct entities");

    SparseGraph g(n);
    for (size_t i = 0; i < n; ++i)
        g.node_ent[i] = i < nodes.size() ? nodes[i] : (nodes.empty() ? 0 : nodes.back());
    for (const Triple& t : triples) g.set_edge(node_of(t.s), node_of(t.o), t.r);
    return g;
}

Tensor graphs_to_input(const std::vector<SparseGraph>& batch, size_t d_e, size_t d_r) {
    if (batch.empty()) throw contract_error("empty graph batch");
    size_t n = batch[0].n;
    size_t width = n * n + n * n * d_r + n * d_e;
    std::vector<double> data(batch.size() * width, 0.0);
    for (size_t b = 0; b < batch.size(); ++b) {
        const SparseGraph& g = batch[b];
        if (g.n != n) throw shape_error("mixed node counts in graph batch");
        double* row = data.data() + b * width;
        for (size_t c = 0; c < n * n; ++c) {
            if (!g.adj[c]) continue;
            row[c] = 1.0;
            row[n * n + c * d_r + static_cast<size_t>(g.edge_rel[c])] = 1.0;
        }
        double* f = row + n * n + n * n * d_r;
        for (size_t i = 0; i < n; ++i) f[i * d_e + static_cast<size_t>(g.node_ent[i])] = 1.0;
    }
    return Tensor::from({batch.size(), width}, std::move(data));
}

std::string TypeCatalog::base_type(const std::string& type_string) {
    size_t start = 0;
    while (start < type_string.size() && type_string[start] == '/') ++start;
    size_t end = type_string.find('/', start);
    return type_string.substr(start, end == std::string::npos ? std::string::npos
                                                              : end - start);
}

TypeCatalog TypeCatalog::load(const std::string& path, const TripleStore& store) {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open type file " + path);
    TypeCatalog cat;
    cat.types_.resize(store.num_entities());
    cat.base_types_.resize(store.num_entities());
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 != std::string::npos)
            throw parse_error(path + ":" + std::to_string(line_no) +
                              ": expected 2 tab-separated fields");
        std::string entity = line.substr(0, t1);
        std::string type = line.substr(t1 + 1);
        int32_t id = store.entity_id(entity);
        if (id < 0) {
            ++cat.unknown_count_;
            continue;
        }
        if (cat.types_[id].empty()) ++cat.typed_count_;
        cat.types_[id].push_back(type);
        cat.base_types_[id].insert(base_type(type));
    }
    return cat;
}

const std::vector<std::string>& TypeCatalog::types_of(int32_t entity) const {
    static const std::vector<std::string> empty;
    if (entity < 0 || static_cast<size_t>(entity) >= types_.size()) return empty;
    return types_[entity];
}

bool TypeCatalog::has_base_type(int32_t entity, const std::string& key) const {
    if (entity < 0 || static_cast<size_t>(entity) >= base_types_.size()) return false;
    return base_types_[entity].count(key) > 0;
}

bool TypeCatalog::has_type_substring(int32_t entity, const std::string& key) const {
    if (entity < 0 || static_cast<size_t>(entity) >= types_.size()) return false;
    for (const std::string& t : types_[entity])
        if (t.find(key) != std::string::npos) return true;
    return false;
}

double TypeCatalog::base_type_fraction(const std::string& key) const {
    if (types_.empty()) return 0.0;
    size_t c = 0;
    for (size_t e = 0; e < base_types_.size(); ++e)
        if (base_types_[e].count(key)) ++c;
    return static_cast<double>(c) / static_cast<double>(types_.size());
}

}  // namespace rgvae
