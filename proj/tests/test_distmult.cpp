#include <doctest.h>

#include <cmath>

#include "rgvae/distmult.hpp"
#include "rgvae/eval_lp.hpp"
#include "support/synthetic.hpp"

using namespace rgvae;

namespace {

DistMult make(size_t d_e, size_t d_r, size_t d_emb, bool variational, uint64_t seed) {
    DistMultConfig cfg;
    cfg.d_e = d_e;
    cfg.d_r = d_r;
    cfg.d_emb = d_emb;
    cfg.variational = variational;
    return DistMult(cfg, seed);
}

void set_row(ParamSet& params, const std::string& table, int32_t row,
             const std::vector<double>& values) {
    Tensor& t = params.at(table);
    size_t cols = t.dim(1);
    for (size_t c = 0; c < values.size(); ++c)
        t.mutable_data()[static_cast<size_t>(row) * cols + c] = values[c];
}

}  // namespace

TEST_SUITE("distmult") {

TEST_CASE("bilinear score arithmetic") {
    DistMult m = make(3, 2, 2, false, 1);
    set_row(m.params(), "ent_emb", 0, {1.0, 2.0});
    set_row(m.params(), "rel_emb", 0, {1.0, 1.0});
    set_row(m.params(), "ent_emb", 1, {3.0, 4.0});
    CHECK(m.score({0, 0, 1}) == doctest::Approx(11.0));

    set_row(m.params(), "rel_emb", 1, {0.0, 0.0});
    CHECK(m.score({0, 1, 1}) == doctest::Approx(0.0));
    CHECK(m.score({1, 1, 0}) == doctest::Approx(0.0));

    CHECK_THROWS_AS(m.score({5, 0, 0}), bounds_error);
    CHECK_THROWS_AS(m.score({0, 3, 0}), bounds_error);
}

TEST_CASE("bilinear symmetry holds for every table") {
    DistMult m = make(7, 3, 5, false, 2);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Triple t{static_cast<int32_t>(rng.index(7)), static_cast<int32_t>(rng.index(3)),
                 static_cast<int32_t>(rng.index(7))};
        CHECK(m.score(t) == m.score({t.o, t.r, t.s}));
    }
}

TEST_CASE("variational scoring limits") {
    DistMult m = make(3, 2, 2, true, 4);
    set_row(m.params(), "ent_emb", 0, {1.0, 2.0});
    set_row(m.params(), "rel_emb", 0, {1.0, 1.0});
    set_row(m.params(), "ent_emb", 1, {3.0, 4.0});
    // logvar defaults to zero, so std = 1 and eps=1 shifts every embedding
    // coordinate by one.
    double shifted = (1.0 + 1.0) * (1.0 + 1.0) * (3.0 + 1.0) +
                     (2.0 + 1.0) * (1.0 + 1.0) * (4.0 + 1.0);
    CHECK(m.score({0, 0, 1}, EpsMode::one) == doctest::Approx(shifted));
    // eps=0 scores at the mean
    CHECK(m.score({0, 0, 1}, EpsMode::zero) == doctest::Approx(11.0));

    // logvar -> -inf collapses the sample onto the mean
    for (auto* name : {"ent_emb_logvar", "rel_emb_logvar"})
        for (double& v : m.params().at(name).mutable_data()) v = -60.0;
    CHECK(m.score({0, 0, 1}, EpsMode::one) == doctest::Approx(11.0).epsilon(1e-9));
    Rng rng(5);
    CHECK(m.score_triples({{0, 0, 1}}, EpsMode::sample, rng)[0] ==
          doctest::Approx(11.0).epsilon(1e-9));
}

TEST_CASE("saturated positives make the BCE vanish") {
    DistMult m = make(2, 1, 1, false, 6);
    double a = std::sqrt(50.0);
    set_row(m.params(), "ent_emb", 0, {a});
    set_row(m.params(), "ent_emb", 1, {a});
    set_row(m.params(), "rel_emb", 0, {1.0});
    OptimizerConfig oc;
    oc.learning_rate = 1e-9;
    Ranger opt(oc);
    Rng rng(7);
    // score(0,0,1) = +50; no negatives so the loss is the positive term only
    double loss = m.train_step({{0, 0, 1}}, 0, DmLossKind::bce, opt, rng);
    CHECK(loss < 1e-6);
}

TEST_CASE("zero-mean zero-logvar variational table has zero KL") {
    DistMult bce_model = make(4, 2, 3, true, 8);
    DistMult elbo_model = make(4, 2, 3, true, 8);
    for (auto* m : {&bce_model, &elbo_model})
        for (auto* name : {"ent_emb", "rel_emb"})
            for (double& v : m->params().at(name).mutable_data()) v = 0.0;

    OptimizerConfig oc;
    oc.learning_rate = 1e-9;
    std::vector<Triple> batch = {{0, 0, 1}, {2, 1, 3}};
    Ranger opt_a(oc), opt_b(oc);
    Rng rng_a(9), rng_b(9);
    double bce = bce_model.train_step(batch, 2, DmLossKind::bce, opt_a, rng_a);
    double elbo = elbo_model.train_step(batch, 2, DmLossKind::elbo, opt_b, rng_b);
    CHECK(bce == doctest::Approx(elbo).epsilon(1e-12));
}

TEST_CASE("elbo loss requires the variational table") {
    DistMult m = make(3, 2, 2, false, 10);
    OptimizerConfig oc;
    Ranger opt(oc);
    Rng rng(11);
    CHECK_THROWS_AS(m.train_step({{0, 0, 1}}, 1, DmLossKind::elbo, opt, rng),
                    contract_error);
}

TEST_CASE("one optimizer step decreases the loss on a fixed batch") {
    DistMult m = make(8, 2, 4, false, 12);
    OptimizerConfig oc;
    oc.learning_rate = 0.05;
    Ranger opt(oc);
    std::vector<Triple> batch = {{0, 0, 1}, {2, 0, 3}, {4, 1, 5}, {6, 1, 7}};
    Rng rng_first(13);
    double first = m.train_step(batch, 4, DmLossKind::bce, opt, rng_first);
    Rng rng_second(13);  // identical corruptions
    double second = m.train_step(batch, 4, DmLossKind::bce, opt, rng_second);
    CHECK(second < first);
}

TEST_CASE("learns a symmetric pattern to high filtered MRR") {
    synthetic::TempDir dir("distmult_pattern");
    synthetic::write_symmetric_kg(dir.path);
    TripleStore store = TripleStore::load(dir.str() + "/train.txt",
                                          dir.str() + "/valid.txt",
                                          dir.str() + "/test.txt", false);
    REQUIRE(store.num_entities() == 20);
    REQUIRE(store.num_relations() == 3);

    DistMult model = make(20, 3, 32, false, 14);
    OptimizerConfig oc;
    oc.learning_rate = 0.05;
    Ranger opt(oc);
    Rng rng(15);
    std::vector<Triple> train = store.training();
    for (int epoch = 0; epoch < 200; ++epoch) {
        for (size_t i = train.size(); i > 1; --i)
            std::swap(train[i - 1], train[rng.index(i)]);
        for (size_t off = 0; off < train.size(); off += 64) {
            size_t end = std::min(off + size_t{64}, train.size());
            std::vector<Triple> chunk(train.begin() + off, train.begin() + end);
            model.train_step(chunk, 10, DmLossKind::bce, opt, rng);
        }
    }

    std::vector<Triple> holdout = store.valid();
    holdout.insert(holdout.end(), store.test().begin(), store.test().end());
    FnScorer scorer([&](const Triple& t) { return model.score(t, EpsMode::zero); });
    LpReport rep = evaluate(holdout, scorer, store, true);
    CHECK(rep.mrr >= 0.8);
}

TEST_CASE("checkpoint round trip") {
    DistMult m = make(5, 3, 4, true, 16);
    std::string path = "/tmp/rgvae_dm_roundtrip.bin";
    m.save(path);
    DistMult loaded = DistMult::load(path);
    CHECK(loaded.config().variational);
    CHECK(loaded.config().d_emb == 4);
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Triple t{static_cast<int32_t>(rng.index(5)), static_cast<int32_t>(rng.index(3)),
                 static_cast<int32_t>(rng.index(5))};
        CHECK(m.score(t, EpsMode::zero) ==
              doctest::Approx(loaded.score(t, EpsMode::zero)).epsilon(1e-6));
    }
}

}  // TEST_SUITE
