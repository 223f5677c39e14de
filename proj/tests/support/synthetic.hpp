// Deterministic synthetic knowledge graphs for the tests: a mixed-pattern KG
// for VAE training, a symmetric-pattern KG the bilinear baseline can solve,
// and a typed KG for the generation experiments.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rgvae/kg_data.hpp"
#include "rgvae/random.hpp"

namespace synthetic {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("rgvae_test_" + tag + "_" +
                                            std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

using RawTriple = std::array<std::string, 3>;

inline void write_tsv(const fs::path& file, const std::vector<RawTriple>& rows) {
    std::ofstream os(file);
    for (const auto& r : rows) os << r[0] << "\t" << r[1] << "\t" << r[2] << "\n";
}

inline std::string ent(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "e%02d", i);
    return buf;
}

// 20 entities, 5 relations, exactly 200 triples: two clusterings, two rings
// and a symmetric offset pattern. The 30 held-out triples (10 valid, 20
// test) are drawn from the symmetric families only, so each one keeps its
// mirror in the training split.
inline void write_cluster_kg(const fs::path& dir) {
    std::vector<RawTriple> keep, candidates;  // candidates: s < o, mirror exists
    auto add = [&](int s, const std::string& r, int o) {
        RawTriple t{ent(s), r, ent(o)};
        if (s < o) candidates.push_back(t);
        else keep.push_back(t);
    };
    for (int c = 0; c < 5; ++c)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                if (a != b) add(c * 4 + a, "/people/same_group", c * 4 + b);
    for (int c = 0; c < 5; ++c)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                if (a != b)
                    add((c * 4 + a + 2) % 20, "/people/alt_group", (c * 4 + b + 2) % 20);
    for (int i = 0; i < 20; ++i) {
        add(i, "/film/offset", (i + 7) % 20);   // +13 is the inverse offset,
        add(i, "/film/offset", (i + 13) % 20);  // so this family is symmetric
    }
    // rings have no mirrors and always stay in training
    for (int i = 0; i < 20; ++i) keep.push_back({ent(i), "/location/next", ent((i + 1) % 20)});
    for (int i = 0; i < 20; ++i) keep.push_back({ent(i), "/location/skip", ent((i + 5) % 20)});

    rgvae::Rng rng(42);
    for (size_t i = candidates.size(); i > 1; --i)
        std::swap(candidates[i - 1], candidates[rng.index(i)]);
    std::vector<RawTriple> valid(candidates.begin(), candidates.begin() + 10);
    std::vector<RawTriple> test(candidates.begin() + 10, candidates.begin() + 30);
    std::vector<RawTriple> train(candidates.begin() + 30, candidates.end());
    train.insert(train.end(), keep.begin(), keep.end());
    for (size_t i = train.size(); i > 1; --i)
        std::swap(train[i - 1], train[rng.index(i)]);
    write_tsv(dir / "train.txt", train);
    write_tsv(dir / "valid.txt", valid);
    write_tsv(dir / "test.txt", test);
}

// 20 entities, 5 relations, 200 triples. Every relation is a pair of
// involution matchings (i paired with base - i and base + 10 - i, mod 20) and
// relations share their pair structure, so each held-out triple keeps both
// its mirror and same-pair triples under other relations in the training
// split. The 30 held-out triples (10 valid, 20 test) are one direction of
// their pair.
inline void write_lp_pattern_kg(const fs::path& dir) {
    std::vector<RawTriple> keep, candidates;
    const char* names[5] = {"/people/bond_a", "/people/bond_b", "/people/bond_c",
                            "/location/tie_a", "/location/tie_b"};
    for (int j = 0; j < 5; ++j) {
        int base = j < 3 ? 1 : 5;
        for (int i = 0; i < 20; ++i)
            for (int off : {0, 10}) {
                int o = ((base + off - i) % 20 + 20) % 20;
                RawTriple t{ent(i), names[j], ent(o)};
                if (i < o) candidates.push_back(t);
                else keep.push_back(t);
            }
    }
    rgvae::Rng rng(42);
    for (size_t i = candidates.size(); i > 1; --i)
        std::swap(candidates[i - 1], candidates[rng.index(i)]);
    std::vector<RawTriple> valid(candidates.begin(), candidates.begin() + 10);
    std::vector<RawTriple> test(candidates.begin() + 10, candidates.begin() + 30);
    std::vector<RawTriple> train(candidates.begin() + 30, candidates.end());
    train.insert(train.end(), keep.begin(), keep.end());
    for (size_t i = train.size(); i > 1; --i)
        std::swap(train[i - 1], train[rng.index(i)]);
    write_tsv(dir / "train.txt", train);
    write_tsv(dir / "valid.txt", valid);
    write_tsv(dir / "test.txt", test);
}

// 20 entities, 3 relations, symmetric patterns only (group membership and
// paired entities), so the bilinear score can separate them. Held-out triples
// always keep their mirror in the training split.
inline void write_symmetric_kg(const fs::path& dir) {
    std::vector<RawTriple> train, holdout;
    auto add = [&](std::vector<RawTriple>& dst, int s, const std::string& r, int o) {
        dst.push_back({ent(s), r, ent(o)});
    };
    int testable = 0;
    for (int c = 0; c < 5; ++c)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                if (a == b) continue;
                int s = c * 4 + a, o = c * 4 + b;
                // One direction of every third pair goes to the holdout.
                if (s < o && ++testable % 3 == 0) add(holdout, s, "/people/same_group", o);
                else add(train, s, "/people/same_group", o);
            }
    for (int c = 0; c < 5; ++c)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                if (a == b) continue;
                add(train, (c * 4 + a + 2) % 20, "/people/alt_group", (c * 4 + b + 2) % 20);
            }
    for (int i = 0; i < 10; ++i) {
        add(train, 2 * i, "/people/partner", 2 * i + 1);
        add(train, 2 * i + 1, "/people/partner", 2 * i);
    }
    std::vector<RawTriple> valid(holdout.begin(), holdout.begin() + 6);
    std::vector<RawTriple> test(holdout.begin() + 6, holdout.end());
    write_tsv(dir / "train.txt", train);
    write_tsv(dir / "valid.txt", valid);
    write_tsv(dir / "test.txt", test);
}

// Typed KG: d_e entities in a ring, 20 relations of which 5 carry the key
// base type, and an entity type file where 7 of every 20 entities are
// "people" (baseline 0.35).
inline void write_typed_kg(const fs::path& dir, int d_e) {
    std::vector<RawTriple> all;
    auto rel = [](int j) {
        char buf[32];
        if (j < 5) std::snprintf(buf, sizeof(buf), "/people/rel%02d", j);
        else std::snprintf(buf, sizeof(buf), "/location/rel%02d", j);
        return std::string(buf);
    };
    auto tent = [](int i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "/m/t%05d", i);
        return std::string(buf);
    };
    for (int i = 0; i < d_e; ++i)
        all.push_back({tent(i), rel(i % 20), tent((i + 1) % d_e)});
    std::vector<RawTriple> train(all.begin(), all.end() - 20);
    std::vector<RawTriple> valid(all.end() - 20, all.end() - 10);
    std::vector<RawTriple> test(all.end() - 10, all.end());
    write_tsv(dir / "train.txt", train);
    write_tsv(dir / "valid.txt", valid);
    write_tsv(dir / "test.txt", test);

    std::ofstream os(dir / "types.tsv");
    for (int i = 0; i < d_e; ++i)
        os << tent(i) << "\t" << (i % 20 < 7 ? "/people/person" : "/org/company") << "\n";
}

// Vocabulary of exactly n_entities with key_count of them typed "people";
// reproduces the FB15K-237 entity-type census for the baseline arithmetic.
inline void write_metadata_kg(const fs::path& dir, int n_entities, int key_count) {
    auto tent = [](int i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "/m/x%05d", i);
        return std::string(buf);
    };
    std::vector<RawTriple> all;
    for (int i = 0; i < n_entities; ++i)
        all.push_back({tent(i), "/r/link", tent((i + 1) % n_entities)});
    std::vector<RawTriple> train(all.begin(), all.end() - 4);
    std::vector<RawTriple> valid(all.end() - 4, all.end() - 2);
    std::vector<RawTriple> test(all.end() - 2, all.end());
    write_tsv(dir / "train.txt", train);
    write_tsv(dir / "valid.txt", valid);
    write_tsv(dir / "test.txt", test);

    std::ofstream os(dir / "types.tsv");
    for (int i = 0; i < n_entities; ++i)
        os << tent(i) << "\t"
           << (i < key_count ? "/people/measured_person" : "/org/company") << "\n";
}

inline std::vector<rgvae::Triple> to_index_triples(const rgvae::TripleStore& store,
                                                   const std::vector<RawTriple>& raw) {
    std::vector<rgvae::Triple> out;
    for (const auto& r : raw)
        out.push_back({store.entity_id(r[0]), store.relation_id(r[1]),
                       store.entity_id(r[2])});
    return out;
}

}  // namespace synthetic
