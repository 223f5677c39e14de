#include "rgvae/optim.hpp"

#include <cmath>

namespace rgvae {

void ParamSet::add(const std::string& name, Tensor param) {
    if (params_.count(name)) throw contract_error("duplicate parameter name " + name);
    if (!param.is_leaf()) param = param.leaf();
    order_.push_back(name);
    params_.emplace(name, std::move(param));
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw contract_error("unknown parameter " + name);
    return it->second;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw contract_error("unknown parameter " + name);
    return it->second;
}

bool ParamSet::has(const std::string& name) const { return params_.count(name) > 0; }

void ParamSet::zero_grad() {
    for (const auto& name : order_) params_.at(name).zero_grad();
}

std::vector<std::pair<std::string, Tensor>> ParamSet::items() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(order_.size());
    for (const auto& name : order_) out.emplace_back(name, params_.at(name));
    return out;
}

void centralize_gradient(std::vector<double>& grad, const Shape& shape) {
    if (shape.size() < 2) return;
    size_t rows = shape[0];
    size_t cols = grad.size() / rows;
    for (size_t r = 0; r < rows; ++r) {
        double m = 0.0;
        for (size_t c = 0; c < cols; ++c) m += grad[r * cols + c];
        m /= static_cast<double>(cols);
        for (size_t c = 0; c < cols; ++c) grad[r * cols + c] -= m;
    }
}

void clip_global_norm(ParamSet& params, double max_norm) {
    double sq = 0.0;
    for (const auto& name : params.names()) {
        const auto& g = params.at(name).grad();
        for (double v : g) sq += v * v;
    }
    double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    double s = max_norm / norm;
    for (const auto& name : params.names()) {
        auto& t = params.at(name);
        auto& g = t.node()->grad;
        for (double& v : g) v *= s;
    }
}

Ranger::Ranger(OptimizerConfig config) : config_(config) { config_.validate(); }

void Ranger::step(ParamSet& params) {
    ++step_count_;
    double b1 = config_.beta1, b2 = config_.beta2;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));

    for (const auto& name : params.names()) {
        Tensor& p = params.at(name);
        if (!p.requires_grad() || p.node()->grad.size() != p.numel())
            throw contract_error("parameter " + name + " has no gradient");
        std::vector<double> g = p.node()->grad;
        if (config_.use_gradient_centralization) centralize_gradient(g, p.shape());

        State& st = state_[name];
        if (st.m.empty()) {
            st.m.assign(p.numel(), 0.0);
            st.v.assign(p.numel(), 0.0);
            st.slow = p.data();
        }
        auto& w = p.mutable_data();
        for (size_t i = 0; i < w.size(); ++i) {
            st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
            st.v[i] = b2 * st.v[i] + (1.0 - b2) * g[i] * g[i];
            double mhat = st.m[i] / bc1;
            double vhat = st.v[i] / bc2;
            w[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
        if (step_count_ % config_.lookahead_k == 0) {
            for (size_t i = 0; i < w.size(); ++i) {
                st.slow[i] += config_.lookahead_alpha * (w[i] - st.slow[i]);
                w[i] = st.slow[i];
            }
        }
    }
}

void ranger_step(ParamSet& params, Ranger& optimizer) { optimizer.step(params); }

Tensor xavier_uniform_init(const Shape& shape, double gain, Rng& rng) {
    if (shape.size() != 2) throw contract_error("xavier init expects a rank-2 shape");
    double fan_in = static_cast<double>(shape[0]);
    double fan_out = static_cast<double>(shape[1]);
    double b = gain * std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> data(shape[0] * shape[1]);
    for (double& v : data) v = rng.uniform(-b, b);
    return Tensor::from(shape, std::move(data));
}

}  // namespace rgvae
