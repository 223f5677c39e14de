#include "rgvae/eval_lp.hpp"

#include <algorithm>
#include <cmath>

#include "rgvae/random.hpp"

namespace rgvae {

namespace {

// Ranks the target among candidate entities for one side of the triple.
double rank_side(const Triple& t, bool tail_side, const Scorer& scorer,
                 const TripleStore& store, bool filtered, size_t batch_size) {
    size_t d_e = store.num_entities();
    const std::vector<int32_t>* truths =
        tail_side ? store.tail_candidates(t.s, t.r) : store.head_candidates(t.r, t.o);
    int32_t target_entity = tail_side ? t.o : t.s;

    std::vector<Triple> batch;
    std::vector<double> scores;
    batch.reserve(batch_size);
    double target_score = 0.0;
    size_t greater = 0, ties = 0;

    std::vector<double> all_scores;
    all_scores.reserve(d_e);
    std::vector<char> keep(d_e, 1);
    if (filtered && truths)
        for (int32_t e : *truths)
            if (e != target_entity) keep[static_cast<size_t>(e)] = 0;

    std::vector<int32_t> kept_ids;
    kept_ids.reserve(d_e);
    for (size_t e = 0; e < d_e; ++e) {
        if (!keep[e]) continue;
        kept_ids.push_back(static_cast<int32_t>(e));
    }

    for (size_t off = 0; off < kept_ids.size(); off += batch_size) {
        size_t end = std::min(off + batch_size, kept_ids.size());
        batch.clear();
        for (size_t i = off; i < end; ++i) {
            Triple c = t;
            if (tail_side) c.o = kept_ids[i]; else c.s = kept_ids[i];
            batch.push_back(c);
        }
        scorer.score_candidates(batch, scores);
        if (scores.size() != batch.size())
            throw contract_error("scorer returned wrong number of scores");
        for (double s : scores) all_scores.push_back(s);
    }

    for (size_t i = 0; i < kept_ids.size(); ++i)
        if (kept_ids[i] == target_entity) target_score = all_scores[i];
    for (size_t i = 0; i < kept_ids.size(); ++i) {
        if (kept_ids[i] == target_entity) continue;
        if (all_scores[i] > target_score) ++greater;
        else if (all_scores[i] == target_score) ++ties;
    }
    return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0;
}

}  // namespace

RankRecord rank_triple(const Triple& t, const Scorer& scorer, const TripleStore& store,
                       bool filtered, size_t batch_size) {
    store.check_bounds(t);
    RankRecord rec;
    rec.triple = t;
    rec.head_rank = rank_side(t, false, scorer, store, filtered, batch_size);
    rec.tail_rank = rank_side(t, true, scorer, store, filtered, batch_size);
    return rec;
}

LpReport evaluate(const std::vector<Triple>& split, const Scorer& scorer,
                  const TripleStore& store, bool filtered,
                  std::vector<RankRecord>* records, size_t batch_size) {
    if (split.empty()) throw contract_error("evaluate needs a non-empty split");
    LpReport rep;
    rep.filtered = filtered;
    rep.count = split.size();
    double mrr = 0.0, h1 = 0.0, h3 = 0.0, h10 = 0.0;
    for (const Triple& t : split) {
        RankRecord rec = rank_triple(t, scorer, store, filtered, batch_size);
        mrr += 1.0 / rec.head_rank + 1.0 / rec.tail_rank;
        h1 += (rec.head_rank <= 1.0) + (rec.tail_rank <= 1.0);
        h3 += (rec.head_rank <= 3.0) + (rec.tail_rank <= 3.0);
        h10 += (rec.head_rank <= 10.0) + (rec.tail_rank <= 10.0);
        if (records) records->push_back(rec);
    }
    double denom = 2.0 * static_cast<double>(split.size());
    rep.mrr = mrr / denom;
    rep.hits1 = h1 / denom;
    rep.hits3 = h3 / denom;
    rep.hits10 = h10 / denom;
    return rep;
}

std::vector<Triple> subset_sample(const std::vector<Triple>& split, double fraction,
                                  uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw contract_error("fraction must be in (0,1]");
    // Floor with a representation-error nudge so 1/3 of 300 is 100, not 99.
    size_t take = static_cast<size_t>(
        std::floor(fraction * static_cast<double>(split.size()) + 1e-9));
    if (fraction == 1.0) return split;
    std::vector<Triple> pool = split;
    Rng rng(seed);
    // Partial Fisher-Yates: the first `take` slots are the sample.
    for (size_t i = 0; i < take && i + 1 < pool.size(); ++i) {
        size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    return pool;
}

}  // namespace rgvae
