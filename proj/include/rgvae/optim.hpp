#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rgvae/tensor.hpp"

namespace rgvae {

struct OptimizerConfig {
    double learning_rate = 3e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int lookahead_k = 6;
    double lookahead_alpha = 0.5;
    bool use_gradient_centralization = true;

    void validate() const {
        if (!(lookahead_alpha > 0.0 && lookahead_alpha <= 1.0))
            throw contract_error("lookahead_alpha must be in (0,1]");
        if (lookahead_k < 1) throw contract_error("lookahead_k must be >= 1");
        if (learning_rate <= 0.0) throw contract_error("learning_rate must be positive");
    }
};

// Named parameter leaves of one model, insertion-ordered.
class ParamSet {
public:
    void add(const std::string& name, Tensor param);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }
    size_t size() const { return order_.size(); }

    void zero_grad();
    std::vector<std::pair<std::string, Tensor>> items() const;

private:
    std::vector<std::string> order_;
    std::map<std::string, Tensor> params_;
};

// Subtracts the per-slice mean from every gradient tensor of rank >= 2
// (mean over all axes but the first).
void centralize_gradient(std::vector<double>& grad, const Shape& shape);

// Scales all gradients so their global L2 norm is at most max_norm.
void clip_global_norm(ParamSet& params, double max_norm);

// Adam with lookahead slow weights and optional gradient centralization.
// Plain Adam is the inner step; a rectified variant would slot in behind the
// same interface.
class Ranger {
public:
    explicit Ranger(OptimizerConfig config);

    // Applies one update to every parameter; gradients must be populated.
    void step(ParamSet& params);

    const OptimizerConfig& config() const { return config_; }
    int64_t step_count() const { return step_count_; }

private:
    struct State {
        std::vector<double> m, v, slow;
    };
    OptimizerConfig config_;
    std::map<std::string, State> state_;
    int64_t step_count_ = 0;
};

// One optimizer step as a free function (fresh state per call chain lives in
// the Ranger instance; this is a convenience for single-step callers).
void ranger_step(ParamSet& params, Ranger& optimizer);

// Entries i.i.d. uniform on [-b, b] with b = gain * sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform_init(const Shape& shape, double gain, Rng& rng);

}  // namespace rgvae
