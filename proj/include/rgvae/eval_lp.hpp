#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rgvae/kg_data.hpp"

namespace rgvae {

// Any triple scorer: fills one score per candidate, higher is better.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual void score_candidates(const std::vector<Triple>& candidates,
                                  std::vector<double>& out) const = 0;
};

// Adapter over a plain function, batched under the hood by the harness.
class FnScorer : public Scorer {
public:
    explicit FnScorer(std::function<double(const Triple&)> fn) : fn_(std::move(fn)) {}
    void score_candidates(const std::vector<Triple>& candidates,
                          std::vector<double>& out) const override {
        out.resize(candidates.size());
        for (size_t i = 0; i < candidates.size(); ++i) out[i] = fn_(candidates[i]);
    }

private:
    std::function<double(const Triple&)> fn_;
};

struct RankRecord {
    Triple triple;
    double head_rank = 0.0;  // half-ranks possible under ties
    double tail_rank = 0.0;
};

struct LpReport {
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    size_t count = 0;
    bool filtered = true;
};

// Entity ranking of one test triple. Filtered mode drops candidates that
// complete a true triple other than the target. The rank is
// 1 + #strictly-greater + #ties/2, the target itself excluded from the ties.
RankRecord rank_triple(const Triple& t, const Scorer& scorer, const TripleStore& store,
                       bool filtered, size_t batch_size = 4096);

LpReport evaluate(const std::vector<Triple>& split, const Scorer& scorer,
                  const TripleStore& store, bool filtered,
                  std::vector<RankRecord>* records = nullptr, size_t batch_size = 4096);

// Deterministic uniform sample without replacement, floor(fraction * size).
std::vector<Triple> subset_sample(const std::vector<Triple>& split, double fraction,
                                  uint64_t seed);

}  // namespace rgvae
