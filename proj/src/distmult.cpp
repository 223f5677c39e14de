#include "rgvae/distmult.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "rgvae/checkpoint.hpp"

namespace rgvae {

namespace {
constexpr double kProbClip = 1e-7;
}

std::string DistMultConfig::to_text() const {
    std::ostringstream os;
    os << "model=distmult\n";
    os << "d_e=" << d_e << "\nd_r=" << d_r << "\nd_emb=" << d_emb << "\n";
    os << "variational=" << (variational ? 1 : 0) << "\n";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", beta);
    os << "beta=" << buf << "\nseed=" << seed << "\n";
    return os.str();
}

DistMultConfig DistMultConfig::from_text(const std::string& text) {
    DistMultConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "d_e") cfg.d_e = std::stoul(val);
        else if (key == "d_r") cfg.d_r = std::stoul(val);
        else if (key == "d_emb") cfg.d_emb = std::stoul(val);
        else if (key == "variational") cfg.variational = val == "1";
        else if (key == "beta") cfg.beta = std::stod(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
    }
    return cfg;
}

DistMult::DistMult(DistMultConfig config, uint64_t seed) : cfg_(config), rng_(seed) {
    cfg_.seed = seed;
    cfg_.validate();
    params_.add("ent_emb", xavier_uniform_init({cfg_.d_e, cfg_.d_emb}, 1.0, rng_));
    params_.add("rel_emb", xavier_uniform_init({cfg_.d_r, cfg_.d_emb}, 1.0, rng_));
    if (cfg_.variational) {
        params_.add("ent_emb_logvar", Tensor({cfg_.d_e, cfg_.d_emb}, 0.0));
        params_.add("rel_emb_logvar", Tensor({cfg_.d_r, cfg_.d_emb}, 0.0));
    }
}

Tensor DistMult::score_batch(const std::vector<Triple>& triples, EpsMode mode, Rng& rng) {
    std::vector<int32_t> s_ids, r_ids, o_ids;
    s_ids.reserve(triples.size());
    r_ids.reserve(triples.size());
    o_ids.reserve(triples.size());
    for (const Triple& t : triples) {
        if (t.s < 0 || static_cast<size_t>(t.s) >= cfg_.d_e || t.o < 0 ||
            static_cast<size_t>(t.o) >= cfg_.d_e || t.r < 0 ||
            static_cast<size_t>(t.r) >= cfg_.d_r)
            throw bounds_error("triple index outside embedding table");
        s_ids.push_back(t.s);
        r_ids.push_back(t.r);
        o_ids.push_back(t.o);
    }
    auto embed = [&](const std::string& base, const std::vector<int32_t>& ids) {
        Tensor m = rows(params_.at(base), ids);
        if (!cfg_.variational) return m;
        Tensor lv = rows(params_.at(base + "_logvar"), ids);
        Tensor std_dev = exp(scale(lv, 0.5));
        if (mode == EpsMode::zero) return m;
        if (mode == EpsMode::one) return add(m, std_dev);
        std::vector<double> e(m.numel());
        for (double& v : e) v = rng.normal();
        return add(m, mul(std_dev, Tensor::from(m.shape(), std::move(e))));
    };
    Tensor es = embed("ent_emb", s_ids);
    Tensor er = embed("rel_emb", r_ids);
    Tensor eo = embed("ent_emb", o_ids);
    // entity factors first: head/tail symmetry then holds bit-exactly
    return sum_lastdim(mul(mul(es, eo), er));
}

std::vector<double> DistMult::score_triples(const std::vector<Triple>& triples,
                                            EpsMode mode, Rng& rng) {
    autograd::NoGradGuard ng;
    return score_batch(triples, mode, rng).data();
}

double DistMult::score(const Triple& t, EpsMode mode) {
    autograd::NoGradGuard ng;
    return score_batch({t}, mode, rng_).value();
}

double DistMult::train_step(const std::vector<Triple>& positives,
                            int negatives_per_positive, DmLossKind loss_kind,
                            Ranger& optimizer, Rng& rng) {
    if (positives.empty()) throw contract_error("empty training batch");
    if (loss_kind == DmLossKind::elbo && !cfg_.variational)
        throw contract_error("elbo loss needs the variational table");

    std::vector<Triple> scored;
    std::vector<double> labels;
    scored.reserve(positives.size() * (1 + negatives_per_positive));
    for (const Triple& t : positives) {
        scored.push_back(t);
        labels.push_back(1.0);
        for (int neg = 0; neg < negatives_per_positive; ++neg) {
            Triple c = t;  // corrupt head or tail uniformly at random
            int32_t e = static_cast<int32_t>(rng.index(cfg_.d_e));
            if (rng.bernoulli(0.5)) c.s = e; else c.o = e;
            scored.push_back(c);
            labels.push_back(0.0);
        }
    }

    Tensor logits = score_batch(scored, EpsMode::sample, rng);
    Tensor p = clamp(sigmoid(logits), kProbClip, 1.0 - kProbClip);
    size_t n_scored = labels.size();
    Tensor y = Tensor::from({n_scored}, std::move(labels));
    Tensor one_minus_y = add_scalar(scale(y, -1.0), 1.0);
    Tensor ll = add(mul(y, log(p)),
                    mul(one_minus_y, log(add_scalar(scale(p, -1.0), 1.0))));
    Tensor loss = scale(mean(ll), -1.0);

    if (loss_kind == DmLossKind::elbo) {
        std::vector<int32_t> s_ids, r_ids, o_ids;
        for (const Triple& t : scored) {
            s_ids.push_back(t.s);
            r_ids.push_back(t.r);
            o_ids.push_back(t.o);
        }
        auto kl_rows = [&](const std::string& base, const std::vector<int32_t>& ids) {
            Tensor m = rows(params_.at(base), ids);
            Tensor lv = rows(params_.at(base + "_logvar"), ids);
            Tensor inner = add_scalar(sub(sub(lv, mul(m, m)), exp(lv)), 1.0);
            return scale(sum_lastdim(inner), -0.5);
        };
        Tensor kl = add(add(kl_rows("ent_emb", s_ids), kl_rows("rel_emb", r_ids)),
                        kl_rows("ent_emb", o_ids));
        loss = add(loss, scale(mean(kl), cfg_.beta));
    }

    params_.zero_grad();
    backward(loss);
    optimizer.step(params_);
    return loss.value();
}

void DistMult::save(const std::string& path) const {
    std::vector<std::pair<std::string, Tensor>> records;
    records.emplace_back("config", text_record(cfg_.to_text()));
    for (const auto& [name, t] : params_.items()) records.emplace_back(name, t);
    save_checkpoint(path, records);
}

DistMult DistMult::load(const std::string& path) {
    auto records = load_checkpoint(path);
    if (records.empty() || records[0].first != "config")
        throw format_error("checkpoint missing config record");
    DistMultConfig cfg = DistMultConfig::from_text(record_text(records[0].second));
    DistMult model(cfg, cfg.seed);
    for (size_t i = 1; i < records.size(); ++i) {
        const auto& [name, t] = records[i];
        if (!model.params_.has(name))
            throw format_error("unexpected checkpoint record " + name);
        Tensor& p = model.params_.at(name);
        if (p.shape() != t.shape())
            throw format_error("checkpoint shape mismatch for " + name);
        p.mutable_data() = t.data();
    }
    return model;
}

}  // namespace rgvae
