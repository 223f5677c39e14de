#include "rgvae/rgvae.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "rgvae/checkpoint.hpp"

namespace rgvae {

namespace {

constexpr double kProbClip = 1e-7;  // keeps every log finite

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RgvaeConfig::validate() const {
    if (n < 2 || d_e == 0 || d_r == 0 || d_z == 0 || d_h == 0)
        throw contract_error("all model dimensions must be positive (n >= 2)");
    if (beta < 0.0 || delta < 0.0) throw contract_error("beta and delta must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) throw contract_error("dropout must be in [0,1)");
    if (match_iterations < 1) throw contract_error("match_iterations must be >= 1");
}

std::string RgvaeConfig::to_text() const {
    std::ostringstream os;
    os << "model=rgvae\n";
    os << "n=" << n << "\nd_e=" << d_e << "\nd_r=" << d_r << "\nd_z=" << d_z
       << "\nd_h=" << d_h << "\n";
    os << "dropout=" << fmt_double(dropout) << "\nbeta=" << fmt_double(beta)
       << "\ndelta=" << fmt_double(delta) << "\n";
    os << "perminv=" << (perminv ? 1 : 0) << "\nclipgrad=" << (clipgrad ? 1 : 0) << "\n";
    os << "encoder=" << (encoder == EncoderKind::mlp ? "mlp" : "gcn") << "\n";
    os << "match_iterations=" << match_iterations << "\nseed=" << seed << "\n";
    return os.str();
}

RgvaeConfig RgvaeConfig::from_text(const std::string& text) {
    RgvaeConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "n") cfg.n = std::stoul(val);
        else if (key == "d_e") cfg.d_e = std::stoul(val);
        else if (key == "d_r") cfg.d_r = std::stoul(val);
        else if (key == "d_z") cfg.d_z = std::stoul(val);
        else if (key == "d_h") cfg.d_h = std::stoul(val);
        else if (key == "dropout") cfg.dropout = std::stod(val);
        else if (key == "beta") cfg.beta = std::stod(val);
        else if (key == "delta") cfg.delta = std::stod(val);
        else if (key == "perminv") cfg.perminv = val == "1";
        else if (key == "clipgrad") cfg.clipgrad = val == "1";
        else if (key == "encoder") cfg.encoder = val == "gcn" ? EncoderKind::gcn : EncoderKind::mlp;
        else if (key == "match_iterations") cfg.match_iterations = std::stoi(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
    }
    return cfg;
}

size_t rgvae_input_dim(size_t n, size_t d_e, size_t d_r) {
    return n * n + n * n * d_r + n * d_e;
}

Tensor reparametrize(const Tensor& mean, const Tensor& logvar, const Tensor& eps) {
    if (mean.shape() != logvar.shape() || mean.shape() != eps.shape())
        throw shape_error("reparametrize shapes " + shape_str(mean.shape()) + ", " +
                          shape_str(logvar.shape()) + ", " + shape_str(eps.shape()));
    Tensor std_dev = exp(scale(logvar, 0.5));
    return add(mean, mul(std_dev, eps));
}

Tensor reparametrize(const Tensor& mean, const Tensor& logvar, Rng& rng) {
    std::vector<double> e(mean.numel());
    for (double& v : e) v = rng.normal();
    return reparametrize(mean, logvar, Tensor::from(mean.shape(), std::move(e)));
}

PredGraphs activate_prediction(const DecodedLogits& lg) {
    autograd::NoGradGuard ng;
    size_t b = lg.batch, n = lg.n;
    PredGraphs pred(b, n, lg.d_e, lg.d_r);
    pred.adj = sigmoid(lg.adj).data();
    pred.edge = softmax_lastdim(reshape(lg.edge, {b * n * n, lg.d_r})).data();
    pred.node = softmax_lastdim(reshape(lg.node, {b * n, lg.d_e})).data();
    return pred;
}

namespace {

size_t argmax_row(const double* row, size_t len) {
    size_t best = 0;
    for (size_t i = 1; i < len; ++i)
        if (row[i] > row[best]) best = i;  // ties go to the lowest index
    return best;
}

std::vector<SparseGraph> discretize_graphs(const DecodedLogits& lg, Rng* rng) {
    autograd::NoGradGuard ng;
    size_t b = lg.batch, n = lg.n, d_e = lg.d_e, d_r = lg.d_r;
    std::vector<SparseGraph> out;
    out.reserve(b);
    for (size_t g = 0; g < b; ++g) {
        SparseGraph graph(n);
        for (size_t i = 0; i < n; ++i) {
            const double* frow = lg.node.data().data() + (g * n + i) * d_e;
            graph.node_ent[i] = static_cast<int32_t>(argmax_row(frow, d_e));
        }
        for (size_t c = 0; c < n * n; ++c) {
            double logit = lg.adj.data()[g * n * n + c];
            double p = 1.0 / (1.0 + std::exp(-logit));
            bool edge = rng ? rng->bernoulli(p) : logit > 0.0;
            if (!edge) continue;
            const double* erow = lg.edge.data().data() + (g * n * n + c) * d_r;
            graph.adj[c] = 1;
            graph.edge_rel[c] = static_cast<int32_t>(argmax_row(erow, d_r));
        }
        out.push_back(std::move(graph));
    }
    return out;
}

Tensor target_adjacency(const std::vector<SparseGraph>& target) {
    size_t b = target.size(), n = target[0].n;
    std::vector<double> a(b * n * n, 0.0);
    for (size_t g = 0; g < b; ++g)
        for (size_t c = 0; c < n * n; ++c) a[g * n * n + c] = target[g].adj[c] ? 1.0 : 0.0;
    return Tensor::from({b, n * n}, std::move(a));
}

// sum of w * (t*log(p) + (1-t)*log(1-p)) per row
Tensor weighted_bernoulli_ll(const Tensor& target01, const Tensor& probs,
                             const Tensor& weights) {
    Tensor logp = log(probs);
    Tensor log1p = log(add_scalar(scale(probs, -1.0), 1.0));
    Tensor ones_minus = add_scalar(scale(target01, -1.0), 1.0);
    Tensor ll = add(mul(target01, logp), mul(ones_minus, log1p));
    return sum_lastdim(mul(weights, ll));
}

// Per-graph reconstruction of the plain loss: BCE on A, categorical CE on E
// and F, each averaged over its rows.
Tensor recon_standard_vec(const std::vector<SparseGraph>& target, const DecodedLogits& lg) {
    size_t b = lg.batch, n = lg.n;
    double cells = static_cast<double>(n * n);

    Tensor atgt = target_adjacency(target);
    Tensor probs = clamp(sigmoid(lg.adj), kProbClip, 1.0 - kProbClip);
    Tensor uniform_w = Tensor({b, n * n}, 1.0 / cells);
    Tensor bce = scale(weighted_bernoulli_ll(atgt, probs, uniform_w), -1.0);

    Tensor eprob = clamp(softmax_lastdim(reshape(lg.edge, {b * n * n, lg.d_r})),
                         kProbClip, 1.0);
    std::vector<double> eone(b * n * n * lg.d_r, 0.0);
    for (size_t g = 0; g < b; ++g)
        for (size_t c = 0; c < n * n; ++c)
            if (target[g].adj[c])
                eone[(g * n * n + c) * lg.d_r + static_cast<size_t>(target[g].edge_rel[c])] =
                    1.0;
    Tensor ce_e = scale(
        sum_lastdim(reshape(
            sum_lastdim(mul(Tensor::from({b * n * n, lg.d_r}, std::move(eone)), log(eprob))),
            {b, n * n})),
        -1.0 / cells);

    Tensor fprob = clamp(softmax_lastdim(reshape(lg.node, {b * n, lg.d_e})),
                         kProbClip, 1.0);
    std::vector<double> fone(b * n * lg.d_e, 0.0);
    for (size_t g = 0; g < b; ++g)
        for (size_t i = 0; i < n; ++i)
            fone[(g * n + i) * lg.d_e + static_cast<size_t>(target[g].node_ent[i])] = 1.0;
    Tensor ce_f = scale(
        sum_lastdim(reshape(
            sum_lastdim(mul(Tensor::from({b * n, lg.d_e}, std::move(fone)), log(fprob))),
            {b, n})),
        -1.0 / static_cast<double>(n));

    return add(add(bce, ce_e), ce_f);
}

// Per-graph reconstruction of the matched loss with a fixed correspondence.
Tensor recon_matched_vec(const std::vector<SparseGraph>& target, const DecodedLogits& lg,
                         const PermutationBatch& x) {
    size_t b = lg.batch, n = lg.n;
    double k = static_cast<double>(n);

    // A-term: target adjacency carried into prediction node order. The
    // diagonal is weighted 1/k, off-diagonal entries 1/k^2 since self-loops
    // are allowed.
    std::vector<double> aperm(b * n * n, 0.0), weights(b * n * n, 0.0);
    std::vector<int32_t> inv(n);
    for (size_t g = 0; g < b; ++g) {
        const int32_t* p = x.target_to_pred.data() + g * n;
        for (size_t i = 0; i < n; ++i)
            inv[static_cast<size_t>(p[i])] = static_cast<int32_t>(i);
        for (size_t a = 0; a < n; ++a)
            for (size_t bb = 0; bb < n; ++bb) {
                aperm[g * n * n + a * n + bb] =
                    target[g].edge(static_cast<size_t>(inv[a]), static_cast<size_t>(inv[bb]))
                        ? 1.0
                        : 0.0;
                weights[g * n * n + a * n + bb] = a == bb ? 1.0 / k : 1.0 / (k * k);
            }
    }
    Tensor probs = clamp(sigmoid(lg.adj), kProbClip, 1.0 - kProbClip);
    Tensor ll_a = weighted_bernoulli_ll(Tensor::from({b, n * n}, std::move(aperm)), probs,
                                        Tensor::from({b, n * n}, std::move(weights)));

    // F-term: (1/n) * sum_i log F~'[i, ent(i)], rows picked through the
    // correspondence.
    Tensor fprob = clamp(softmax_lastdim(reshape(lg.node, {b * n, lg.d_e})),
                         kProbClip, 1.0);
    std::vector<size_t> fidx(b * n);
    for (size_t g = 0; g < b; ++g)
        for (size_t i = 0; i < n; ++i) {
            size_t a = static_cast<size_t>(x.pred_of(g, i));
            fidx[g * n + i] =
                (g * n + a) * lg.d_e + static_cast<size_t>(target[g].node_ent[i]);
        }
    Tensor ll_f = scale(sum_lastdim(reshape(log(gather(fprob, fidx, {b * n})), {b, n})),
                        1.0 / static_cast<double>(n));

    // E-term: (1/|A|) * sum over target edges of log E~'[i,j, rel(i,j)];
    // only edge cells contribute, matching the normalizer.
    Tensor eprob = clamp(softmax_lastdim(reshape(lg.edge, {b * n * n, lg.d_r})),
                         kProbClip, 1.0);
    std::vector<size_t> eidx, eseg;
    std::vector<double> ewt(b, 0.0);
    for (size_t g = 0; g < b; ++g) {
        size_t edges = target[g].edge_count();
        if (edges) ewt[g] = 1.0 / static_cast<double>(edges);
        const int32_t* p = x.target_to_pred.data() + g * n;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                if (!target[g].edge(i, j)) continue;
                size_t a = static_cast<size_t>(p[i]), bb = static_cast<size_t>(p[j]);
                eidx.push_back((g * n * n + a * n + bb) * lg.d_r +
                               static_cast<size_t>(target[g].rel(i, j)));
                eseg.push_back(g);
            }
    }
    Tensor ll_e;
    if (eidx.empty()) {
        ll_e = Tensor({b}, 0.0);
    } else {
        Tensor edge_ll = segment_sum(log(gather(eprob, eidx, {eidx.size()})), eseg, b);
        ll_e = mul(edge_ll, Tensor::from({b}, std::move(ewt)));
    }

    return scale(add(add(ll_a, ll_f), ll_e), -1.0);
}

LossBreakdown assemble_loss(Tensor recon_vec, const LatentCode& latent, double beta,
                            double delta, double perm_rate) {
    Tensor recon = mean(recon_vec);
    Tensor kl_vec = kl_divergence_vec(latent);
    Tensor reg = scale(mean(abs(add_scalar(kl_vec, -delta))), beta);
    LossBreakdown out;
    out.total = add(recon, reg);
    out.recon = recon.value();
    out.kl = mean(kl_vec).value();
    out.reg = reg.value();
    out.perm_rate = perm_rate;
    return out;
}

}  // namespace

std::vector<SparseGraph> sample_discrete(const DecodedLogits& logits, Rng& rng) {
    return discretize_graphs(logits, &rng);
}

std::vector<SparseGraph> argmax_discrete(const DecodedLogits& logits) {
    return discretize_graphs(logits, nullptr);
}

Tensor kl_divergence_vec(const LatentCode& latent) {
    // closed form against the standard normal, summed over latent dims
    Tensor inner = add_scalar(
        sub(sub(latent.logvar, mul(latent.mean, latent.mean)), exp(latent.logvar)), 1.0);
    return scale(sum_lastdim(inner), -0.5);
}

LossBreakdown loss_standard(const std::vector<SparseGraph>& target,
                            const DecodedLogits& lg, const LatentCode& latent,
                            double beta, double delta) {
    if (target.size() != lg.batch) throw shape_error("target batch vs logits batch");
    return assemble_loss(recon_standard_vec(target, lg), latent, beta, delta, 0.0);
}

LossBreakdown loss_matched(const std::vector<SparseGraph>& target,
                           const DecodedLogits& lg, const LatentCode& latent, double beta,
                           double delta, int match_iterations,
                           const PermutationBatch* frozen_x) {
    if (target.size() != lg.batch) throw shape_error("target batch vs logits batch");
    if (!target.empty() && target[0].n != lg.n)
        throw shape_error("matched loss needs equal target and prediction node counts");

    PermutationBatch local;
    const PermutationBatch* x = frozen_x;
    if (!x) {
        PredGraphs pred = activate_prediction(lg);
        local =
            discretize(maxpool_similarity(affinity_batch(target, pred), match_iterations));
        x = &local;
    }
    return assemble_loss(recon_matched_vec(target, lg, *x), latent, beta, delta,
                         permutation_rate(*x));
}

Rgvae::Rgvae(RgvaeConfig config, uint64_t seed) : cfg_(config), rng_(seed) {
    cfg_.seed = seed;
    cfg_.validate();
    init_params();
}

void Rgvae::init_params() {
    const double gain = 0.01;  // xavier gain of the reference setup
    size_t din = cfg_.input_dim();
    size_t dz2 = 2 * cfg_.d_z, dh = cfg_.d_h, dh2 = 2 * cfg_.d_h;
    auto w = [&](Shape s) { return xavier_uniform_init(s, gain, rng_); };

    if (cfg_.encoder == EncoderKind::mlp) {
        params_.add("encoder.lin1.weight", w({din, dh2}));
        params_.add("encoder.lin1.bias", Tensor({dh2}, 0.0));
        params_.add("encoder.lin2.weight", w({dh2, dh}));
        params_.add("encoder.lin2.bias", Tensor({dh}, 0.0));
        params_.add("encoder.lin3.weight", w({dh, dz2}));
        params_.add("encoder.lin3.bias", Tensor({dz2}, 0.0));
    } else {
        size_t f = cfg_.d_e + cfg_.n * cfg_.d_r;
        params_.add("encoder.conv1.weight", w({f, dh}));
        params_.add("encoder.conv2.weight", w({dh, dh}));
        params_.add("encoder.lin3.weight", w({cfg_.n * dh, dz2}));
        params_.add("encoder.lin3.bias", Tensor({dz2}, 0.0));
    }
    params_.add("decoder.lin1.weight", w({cfg_.d_z, dh}));
    params_.add("decoder.lin1.bias", Tensor({dh}, 0.0));
    params_.add("decoder.lin2.weight", w({dh, dh2}));
    params_.add("decoder.lin2.bias", Tensor({dh2}, 0.0));
    params_.add("decoder.lin3.weight", w({dh2, din}));
    params_.add("decoder.lin3.bias", Tensor({din}, 0.0));
}

LatentCode Rgvae::encode(const std::vector<SparseGraph>& batch, bool training) {
    return cfg_.encoder == EncoderKind::mlp ? encode_mlp(batch, training)
                                            : encode_gcn(batch, training);
}

LatentCode Rgvae::encode_mlp(const std::vector<SparseGraph>& batch, bool training) {
    Tensor x = graphs_to_input(batch, cfg_.d_e, cfg_.d_r);
    Tensor h = relu(add(matmul(x, params_.at("encoder.lin1.weight")),
                        params_.at("encoder.lin1.bias")));
    h = dropout(h, cfg_.dropout, training, rng_);
    h = relu(add(matmul(h, params_.at("encoder.lin2.weight")),
                 params_.at("encoder.lin2.bias")));
    Tensor out = add(matmul(h, params_.at("encoder.lin3.weight")),
                     params_.at("encoder.lin3.bias"));
    LatentCode code;
    code.mean = slice_lastdim(out, 0, cfg_.d_z);
    code.logvar = slice_lastdim(out, cfg_.d_z, 2 * cfg_.d_z);
    code.z = training ? reparametrize(code.mean, code.logvar, rng_)
                      : reparametrize(code.mean, code.logvar, Tensor(code.mean.shape(), 0.0));
    return code;
}

LatentCode Rgvae::encode_gcn(const std::vector<SparseGraph>& batch, bool training) {
    size_t b = batch.size(), n = cfg_.n;
    size_t f = cfg_.d_e + n * cfg_.d_r;
    // Node features: [F | E flattened over its second axis]; the propagation
    // matrix is the row-normalized A + I, so isolated nodes keep themselves.
    std::vector<double> feat(b * n * f, 0.0), ahat(b * n * n, 0.0);
    for (size_t g = 0; g < b; ++g) {
        const SparseGraph& gr = batch[g];
        if (gr.n != n) throw shape_error("graph node count vs config n");
        for (size_t i = 0; i < n; ++i) {
            double* row = feat.data() + (g * n + i) * f;
            row[static_cast<size_t>(gr.node_ent[i])] = 1.0;
            for (size_t j = 0; j < n; ++j)
                if (gr.edge(i, j))
                    row[cfg_.d_e + j * cfg_.d_r + static_cast<size_t>(gr.rel(i, j))] = 1.0;
        }
        for (size_t i = 0; i < n; ++i) {
            double deg = 1.0;
            for (size_t j = 0; j < n; ++j) deg += gr.edge(i, j) ? 1.0 : 0.0;
            for (size_t j = 0; j < n; ++j) {
                double v = (i == j ? 1.0 : 0.0) + (gr.edge(i, j) ? 1.0 : 0.0);
                ahat[(g * n + i) * n + j] = v / deg;
            }
        }
    }
    Tensor features = Tensor::from({b, n, f}, std::move(feat));
    Tensor norm_adj = Tensor::from({b, n, n}, std::move(ahat));
    Tensor h = relu(matmul(norm_adj, matmul(features, params_.at("encoder.conv1.weight"))));
    h = dropout(h, cfg_.dropout, training, rng_);
    h = relu(matmul(norm_adj, matmul(h, params_.at("encoder.conv2.weight"))));
    Tensor out = add(matmul(reshape(h, {b, n * cfg_.d_h}), params_.at("encoder.lin3.weight")),
                     params_.at("encoder.lin3.bias"));
    LatentCode code;
    code.mean = slice_lastdim(out, 0, cfg_.d_z);
    code.logvar = slice_lastdim(out, cfg_.d_z, 2 * cfg_.d_z);
    code.z = training ? reparametrize(code.mean, code.logvar, rng_)
                      : reparametrize(code.mean, code.logvar, Tensor(code.mean.shape(), 0.0));
    return code;
}

DecodedLogits Rgvae::decode(const Tensor& z, bool training) {
    if (z.rank() != 2 || z.dim(1) != cfg_.d_z)
        throw shape_error("decoder input " + shape_str(z.shape()) + " expects width " +
                          std::to_string(cfg_.d_z));
    Tensor h = relu(add(matmul(z, params_.at("decoder.lin1.weight")),
                        params_.at("decoder.lin1.bias")));
    h = relu(add(matmul(h, params_.at("decoder.lin2.weight")),
                 params_.at("decoder.lin2.bias")));
    h = dropout(h, cfg_.dropout, training, rng_);
    Tensor flat = add(matmul(h, params_.at("decoder.lin3.weight")),
                      params_.at("decoder.lin3.bias"));
    size_t n2 = cfg_.n * cfg_.n;
    DecodedLogits out;
    out.batch = z.dim(0);
    out.n = cfg_.n;
    out.d_e = cfg_.d_e;
    out.d_r = cfg_.d_r;
    out.adj = slice_lastdim(flat, 0, n2);
    out.edge = slice_lastdim(flat, n2, n2 + n2 * cfg_.d_r);
    out.node = slice_lastdim(flat, n2 + n2 * cfg_.d_r, cfg_.input_dim());
    return out;
}

LossBreakdown Rgvae::loss(const std::vector<SparseGraph>& target,
                          const DecodedLogits& logits, const LatentCode& latent) const {
    if (cfg_.perminv)
        return loss_matched(target, logits, latent, cfg_.beta, cfg_.delta,
                            cfg_.match_iterations);
    return loss_standard(target, logits, latent, cfg_.beta, cfg_.delta);
}

StepStats Rgvae::train_step(const std::vector<SparseGraph>& batch, Ranger& optimizer) {
    LatentCode latent = encode(batch, true);
    DecodedLogits logits = decode(latent.z, true);
    LossBreakdown lb = loss(batch, logits, latent);
    params_.zero_grad();
    backward(lb.total);
    if (cfg_.clipgrad) clip_global_norm(params_, 1.0);
    optimizer.step(params_);
    return {lb.total.value(), lb.recon, lb.kl, lb.perm_rate};
}

std::vector<double> Rgvae::score_triples(const std::vector<Triple>& triples) {
    autograd::NoGradGuard ng;
    std::vector<SparseGraph> batch = triples_to_graphs(triples, cfg_.n, cfg_.d_e, cfg_.d_r);
    LatentCode latent = encode(batch, false);
    DecodedLogits logits = decode(latent.z, false);

    Tensor recon_vec;
    if (cfg_.perminv) {
        PredGraphs pred = activate_prediction(logits);
        PermutationBatch x = discretize(
            maxpool_similarity(affinity_batch(batch, pred), cfg_.match_iterations));
        recon_vec = recon_matched_vec(batch, logits, x);
    } else {
        recon_vec = recon_standard_vec(batch, logits);
    }
    Tensor kl_vec = kl_divergence_vec(latent);

    std::vector<double> scores(batch.size());
    for (size_t g = 0; g < batch.size(); ++g) {
        double total =
            recon_vec.data()[g] + cfg_.beta * std::fabs(kl_vec.data()[g] - cfg_.delta);
        scores[g] = -total;
    }
    return scores;
}

void Rgvae::save(const std::string& path) const {
    std::vector<std::pair<std::string, Tensor>> records;
    records.emplace_back("config", text_record(cfg_.to_text()));
    for (const auto& [name, t] : params_.items()) records.emplace_back(name, t);
    save_checkpoint(path, records);
}

Rgvae Rgvae::load(const std::string& path) {
    auto records = load_checkpoint(path);
    if (records.empty() || records[0].first != "config")
        throw format_error("checkpoint missing config record");
    RgvaeConfig cfg = RgvaeConfig::from_text(record_text(records[0].second));
    Rgvae model(cfg, cfg.seed);
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
