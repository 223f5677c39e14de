#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgvae/graph_match.hpp"
#include "rgvae/kg_data.hpp"
#include "rgvae/optim.hpp"
#include "rgvae/tensor.hpp"

namespace rgvae {

enum class EncoderKind { mlp, gcn };

struct RgvaeConfig {
    size_t n = 2;
    size_t d_e = 0;
    size_t d_r = 0;
    size_t d_z = 100;
    size_t d_h = 512;
    double dropout = 0.2;
    double beta = 1.0;    // 100 is the tuned value
    double delta = 0.0;
    bool perminv = true;
    bool clipgrad = true;
    EncoderKind encoder = EncoderKind::mlp;
    int match_iterations = 40;
    uint64_t seed = 0;

    size_t input_dim() const { return n * n + n * n * d_r + n * d_e; }
    void validate() const;

    std::string to_text() const;
    static RgvaeConfig from_text(const std::string& text);
};

size_t rgvae_input_dim(size_t n, size_t d_e, size_t d_r);

struct LatentCode {
    Tensor mean;    // (batch, d_z)
    Tensor logvar;  // (batch, d_z)
    Tensor z;       // (batch, d_z)
};

// z = mean + exp(logvar/2) * eps.
Tensor reparametrize(const Tensor& mean, const Tensor& logvar, const Tensor& eps);
Tensor reparametrize(const Tensor& mean, const Tensor& logvar, Rng& rng);

struct DecodedLogits {
    Tensor adj;   // (batch, n*n)
    Tensor edge;  // (batch, n*n*d_r)
    Tensor node;  // (batch, n*d_e)
    size_t batch = 0, n = 0, d_e = 0, d_r = 0;
};

// Sigmoid on the adjacency, softmax over the last axis of the attribute
// blocks; detached plain values for matching and sampling.
PredGraphs activate_prediction(const DecodedLogits& logits);

// Bernoulli draws on the adjacency probabilities, argmax attributes; edge
// attributes are kept only where an edge was drawn.
std::vector<SparseGraph> sample_discrete(const DecodedLogits& logits, Rng& rng);
// Deterministic variant: adjacency thresholded at 0.5, argmax attributes
// (ties resolved to the lowest index).
std::vector<SparseGraph> argmax_discrete(const DecodedLogits& logits);

struct LossBreakdown {
    Tensor total;           // scalar, differentiable
    double recon = 0.0;
    double kl = 0.0;
    double reg = 0.0;
    double perm_rate = 0.0;
};

// -0.5 * sum(1 + logvar - mean^2 - exp(logvar)) per graph.
Tensor kl_divergence_vec(const LatentCode& latent);

// Plain VAE loss: BCE on the adjacency, categorical cross-entropy on both
// attribute blocks, plus beta * |KL - delta|.
LossBreakdown loss_standard(const std::vector<SparseGraph>& target,
                            const DecodedLogits& logits, const LatentCode& latent,
                            double beta, double delta);

// Permutation-invariant loss: max-pool matching aligns prediction and target
// before the log-likelihood terms. The correspondence is a constant with
// respect to gradients; pass frozen_x to reuse a precomputed one.
LossBreakdown loss_matched(const std::vector<SparseGraph>& target,
                           const DecodedLogits& logits, const LatentCode& latent,
                           double beta, double delta, int match_iterations = 40,
                           const PermutationBatch* frozen_x = nullptr);

struct StepStats {
    double total = 0.0, recon = 0.0, kl = 0.0, perm_rate = 0.0;
};

class Rgvae {
public:
    Rgvae(RgvaeConfig config, uint64_t seed);

    const RgvaeConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    // training=true enables dropout and samples the reparametrization noise;
    // otherwise the latent is the encoder mean.
    LatentCode encode(const std::vector<SparseGraph>& batch, bool training);
    DecodedLogits decode(const Tensor& z, bool training);

    LossBreakdown loss(const std::vector<SparseGraph>& target, const DecodedLogits& logits,
                       const LatentCode& latent) const;

    StepStats train_step(const std::vector<SparseGraph>& batch, Ranger& optimizer);

    // Deterministic per-triple score (negative loss at mean latent); higher
    // is better.
    std::vector<double> score_triples(const std::vector<Triple>& triples);

    void save(const std::string& path) const;
    static Rgvae load(const std::string& path);

    Rng& rng() { return rng_; }

private:
    RgvaeConfig cfg_;
    ParamSet params_;
    Rng rng_;

    void init_params();
    LatentCode encode_mlp(const std::vector<SparseGraph>& batch, bool training);
    LatentCode encode_gcn(const std::vector<SparseGraph>& batch, bool training);
};

}  // namespace rgvae
