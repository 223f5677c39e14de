#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgvae/kg_data.hpp"
#include "rgvae/optim.hpp"
#include "rgvae/tensor.hpp"

namespace rgvae {

// Noise mode for variational scoring: eps=1 disables sampling, eps=0 scores
// at the mean.
enum class EpsMode { sample, one, zero };

enum class DmLossKind { bce, elbo };

struct DistMultConfig {
    size_t d_e = 0;
    size_t d_r = 0;
    size_t d_emb = 256;
    bool variational = false;
    double beta = 1.0;
    uint64_t seed = 0;

    void validate() const {
        if (d_e == 0 || d_r == 0 || d_emb == 0)
            throw contract_error("embedding dimensions must be positive");
    }
    std::string to_text() const;
    static DistMultConfig from_text(const std::string& text);
};

// Bilinear scoring baseline; the variational flavor stores (mean, logvar)
// per embedding row and scores through the reparametrization.
class DistMult {
public:
    DistMult(DistMultConfig config, uint64_t seed);

    const DistMultConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    // Differentiable batched scores, one per triple.
    Tensor score_batch(const std::vector<Triple>& triples, EpsMode mode, Rng& rng);
    // Plain scores without graph recording.
    std::vector<double> score_triples(const std::vector<Triple>& triples, EpsMode mode,
                                      Rng& rng);
    double score(const Triple& t, EpsMode mode = EpsMode::one);

    // Negative sampling step: every positive is joined by
    // negatives_per_positive corruptions of head or tail. Returns the loss.
    double train_step(const std::vector<Triple>& positives, int negatives_per_positive,
                      DmLossKind loss_kind, Ranger& optimizer, Rng& rng);

    void save(const std::string& path) const;
    static DistMult load(const std::string& path);

private:
    DistMultConfig cfg_;
    ParamSet params_;
    Rng rng_;
};

}  // namespace rgvae
