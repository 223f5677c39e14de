#include <doctest.h>

#include <fstream>

#include "rgvae/kg_data.hpp"
#include "rgvae/rgvae.hpp"
#include "support/synthetic.hpp"

using namespace rgvae;
using synthetic::TempDir;

namespace {

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream os(path);
    for (const auto& l : lines) os << l << "\n";
}

}  // namespace

TEST_SUITE("kg_data") {

TEST_CASE("minimal vocabulary construction") {
    TempDir dir("kg_minimal");
    write_lines(dir.str() + "/train.txt", {"a\tr\tb"});
    write_lines(dir.str() + "/valid.txt", {"a\tr\tb"});
    write_lines(dir.str() + "/test.txt", {"b\tr\ta"});
    TripleStore st = TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                       dir.str() + "/test.txt", false);
    CHECK(st.num_entities() == 2);
    CHECK(st.num_relations() == 1);
    REQUIRE(st.train().size() == 1);
    CHECK(st.train()[0] == Triple{0, 0, 1});
    CHECK(st.triple_string({0, 0, 1}) == "a\tr\tb");
}

TEST_CASE("malformed line reports its number") {
    TempDir dir("kg_malformed");
    write_lines(dir.str() + "/train.txt", {"a\tr\tb", "broken line"});
    write_lines(dir.str() + "/valid.txt", {"a\tr\tb"});
    write_lines(dir.str() + "/test.txt", {"a\tr\tb"});
    try {
        TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                          dir.str() + "/test.txt", false);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    write_lines(dir.str() + "/train.txt", {"a\tr\tb\tc"});
    CHECK_THROWS_AS(TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                      dir.str() + "/test.txt", false),
                    parse_error);
}

TEST_CASE("empty file is a dataset error") {
    TempDir dir("kg_empty");
    write_lines(dir.str() + "/train.txt", {});
    write_lines(dir.str() + "/valid.txt", {"a\tr\tb"});
    write_lines(dir.str() + "/test.txt", {"a\tr\tb"});
    CHECK_THROWS_AS(TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                      dir.str() + "/test.txt", false),
                    data_error);
}

TEST_CASE("vocabulary order is first occurrence and deterministic") {
    TempDir dir("kg_vocab");
    write_lines(dir.str() + "/train.txt", {"z\tr1\ty", "a\tr2\tz"});
    write_lines(dir.str() + "/valid.txt", {"q\tr1\ta"});
    write_lines(dir.str() + "/test.txt", {"y\tr3\tq"});
    auto load = [&] {
        return TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                 dir.str() + "/test.txt", false);
    };
    TripleStore a = load();
    TripleStore b = load();
    CHECK(a.entities() == std::vector<std::string>{"z", "y", "a", "q"});
    CHECK(a.relations() == std::vector<std::string>{"r1", "r2", "r3"});
    CHECK(a.entities() == b.entities());
    CHECK(a.relations() == b.relations());
}

TEST_CASE("final mode folds valid into training") {
    TempDir dir("kg_final");
    write_lines(dir.str() + "/train.txt", {"a\tr\tb", "b\tr\tc"});
    write_lines(dir.str() + "/valid.txt", {"c\tr\ta"});
    write_lines(dir.str() + "/test.txt", {"a\tr\tc"});
    TripleStore dev = TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                        dir.str() + "/test.txt", false);
    CHECK(dev.training().size() == 2);
    CHECK(dev.evaluation() == dev.valid());
    TripleStore fin = TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                        dir.str() + "/test.txt", true);
    CHECK(fin.training().size() == 3);
    CHECK(fin.evaluation() == fin.test());
}

TEST_CASE("filter indexes cover every triple in every split") {
    TempDir dir("kg_filters");
    synthetic::write_cluster_kg(dir.path);
    TripleStore st = TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                       dir.str() + "/test.txt", false);
    CHECK(st.total_triples() == 200);
    for (const auto* split : {&st.train(), &st.valid(), &st.test()})
        for (const Triple& t : *split) {
            const auto* tails = st.tail_candidates(t.s, t.r);
            REQUIRE(tails != nullptr);
            CHECK(std::binary_search(tails->begin(), tails->end(), t.o));
            const auto* heads = st.head_candidates(t.r, t.o);
            REQUIRE(heads != nullptr);
            CHECK(std::binary_search(heads->begin(), heads->end(), t.s));
            CHECK(st.contains(t));
        }
    CHECK_FALSE(st.contains({0, 2, 0}));
}

TEST_CASE("triple to graph construction") {
    auto graphs = triples_to_graphs({{0, 5, 3}}, 2, 10, 7);
    REQUIRE(graphs.size() == 1);
    const SparseGraph& g = graphs[0];
    CHECK(g.edge(0, 1));
    CHECK_FALSE(g.edge(0, 0));
    CHECK_FALSE(g.edge(1, 0));
    CHECK(g.rel(0, 1) == 5);
    CHECK(g.node_ent[0] == 0);
    CHECK(g.node_ent[1] == 3);

    auto loop = triples_to_graphs({{2, 1, 2}}, 2, 10, 7);
    CHECK(loop[0].edge(0, 0));
    CHECK(loop[0].rel(0, 0) == 1);
    CHECK(loop[0].node_ent[0] == 2);
    CHECK(loop[0].node_ent[1] == 2);
    CHECK(loop[0].edge_count() == 1);

    CHECK_THROWS_AS(triples_to_graphs({{0, 5, 12}}, 2, 10, 7), bounds_error);
    CHECK_THROWS_AS(triples_to_graphs({{0, 9, 1}}, 2, 10, 7), bounds_error);
}

TEST_CASE("graph to triple read-off") {
    SparseGraph g(2);
    g.node_ent[0] = 2;
    g.node_ent[1] = 7;
    g.set_edge(1, 0, 4);
    auto triples = graphs_to_triples({g});
    REQUIRE(triples.size() == 1);
    CHECK(triples[0] == Triple{7, 4, 2});

    SparseGraph empty(2);
    CHECK(graphs_to_triples({empty}).empty());
}

TEST_CASE("round trip is the identity") {
    Rng rng(21);
    std::vector<Triple> batch;
    for (int i = 0; i < 200; ++i) {
        int32_t s = static_cast<int32_t>(rng.index(9));
        int32_t o = static_cast<int32_t>(rng.index(9));
        batch.push_back({s, static_cast<int32_t>(rng.index(5)), o});
    }
    CHECK(graphs_to_triples(triples_to_graphs(batch, 2, 9, 5)) == batch);
}

TEST_CASE("subgraph packs subjects first then unseen objects") {
    SparseGraph g = subgraph_from_triples({{4, 0, 2}, {2, 1, 5}}, 3, 8, 3);
    CHECK(g.node_ent == std::vector<int32_t>{4, 2, 5});
    CHECK(g.edge(0, 1));
    CHECK(g.rel(0, 1) == 0);
    CHECK(g.edge(1, 2));
    CHECK(g.rel(1, 2) == 1);
    CHECK_THROWS_AS(subgraph_from_triples({{0, 0, 1}, {2, 0, 3}}, 3, 8, 3),
                    contract_error);
}

TEST_CASE("dense input layout is [A | E | F]") {
    auto graphs = triples_to_graphs({{1, 2, 0}}, 2, 3, 4);
    Tensor x = graphs_to_input(graphs, 3, 4);
    REQUIRE(x.shape() == Shape{1, rgvae_input_dim(2, 3, 4)});
    CHECK(x(1) == 1.0);                    // A[0,1]
    CHECK(x(4 + 1 * 4 + 2) == 1.0);        // E[0,1,2]
    CHECK(x(4 + 16 + 0 * 3 + 1) == 1.0);   // F[0] = e1
    CHECK(x(4 + 16 + 1 * 3 + 0) == 1.0);   // F[1] = e0
    double total = 0.0;
    for (double v : x.data()) total += v;
    CHECK(total == 4.0);  // one edge, one edge attribute, two node attributes
}

TEST_CASE("type catalog") {
    CHECK(TypeCatalog::base_type("/people/measured_person") == "people");
    CHECK(TypeCatalog::base_type("people/x") == "people");
    CHECK(TypeCatalog::base_type("plain") == "plain");

    TempDir dir("kg_types");
    write_lines(dir.str() + "/train.txt", {"a\tr\tb", "b\tr\tc"});
    write_lines(dir.str() + "/valid.txt", {"c\tr\ta"});
    write_lines(dir.str() + "/test.txt", {"a\tr\tc"});
    TripleStore st = TripleStore::load(dir.str() + "/train.txt", dir.str() + "/valid.txt",
                                       dir.str() + "/test.txt", false);
    write_lines(dir.str() + "/types.tsv",
                {"a\t/people/measured_person", "a\t/award/winner", "b\t/org/company",
                 "ghost\t/people/person"});
    TypeCatalog cat = TypeCatalog::load(dir.str() + "/types.tsv", st);
    CHECK(cat.unknown_entity_count() == 1);
    CHECK(cat.types_of(st.entity_id("a")).size() == 2);
    CHECK(cat.has_base_type(st.entity_id("a"), "people"));
    CHECK(cat.has_base_type(st.entity_id("a"), "award"));
    CHECK_FALSE(cat.has_base_type(st.entity_id("b"), "people"));
    CHECK(cat.types_of(st.entity_id("c")).empty());
    CHECK(cat.has_type_substring(st.entity_id("a"), "measured"));
    CHECK(cat.base_type_fraction("people") == doctest::Approx(1.0 / 3.0));
}

}  // TEST_SUITE
