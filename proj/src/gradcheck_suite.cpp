#include <cmath>

#include "rgvae/gradcheck.hpp"
#include "rgvae/rgvae.hpp"

namespace rgvae {

namespace {

Tensor rand_t(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    std::vector<double> d(shape_numel(shape));
    for (double& v : d) v = rng.uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(d));
}

// Keeps piecewise ops away from their kinks.
Tensor rand_away_from_zero(Rng& rng, Shape shape, double margin = 0.2) {
    std::vector<double> d(shape_numel(shape));
    for (double& v : d) {
        double x = rng.uniform(margin, 1.0 + margin);
        v = rng.bernoulli(0.5) ? x : -x;
    }
    return Tensor::from(std::move(shape), std::move(d));
}

double max_over_points(Rng& rng, int points,
                       const std::function<double(Rng&)>& one_check) {
    double worst = 0.0;
    for (int i = 0; i < points; ++i) worst = std::max(worst, one_check(rng));
    return worst;
}

// Moderate random magnitudes keep ReLU preactivations clear of the
// finite-difference step.
void randomize_params(ParamSet& params, Rng& rng) {
    for (const auto& name : params.names()) {
        Tensor& p = params.at(name);
        double fan = p.rank() == 2 ? static_cast<double>(p.dim(0)) : 4.0;
        double b = 0.8 / std::sqrt(fan);
        for (double& v : p.mutable_data()) v = rng.uniform(-b, b);
    }
}

struct LossCheckSetup {
    Rgvae model;
    std::vector<SparseGraph> batch;
    std::vector<std::string> names;
};

LossCheckSetup make_tiny_model(EncoderKind enc, Rng& rng, uint64_t seed) {
    RgvaeConfig cfg;
    cfg.n = 2;
    cfg.d_e = 4;
    cfg.d_r = 3;
    cfg.d_z = 3;
    cfg.d_h = 6;
    cfg.dropout = 0.2;
    cfg.encoder = enc;
    LossCheckSetup setup{Rgvae(cfg, seed), {}, {}};
    randomize_params(setup.model.params(), rng);
    std::vector<Triple> triples = {{0, 1, 3}, {2, 0, 1}, {1, 2, 1}};
    setup.batch = triples_to_graphs(triples, cfg.n, cfg.d_e, cfg.d_r);
    setup.names = setup.model.params().names();
    return setup;
}

double check_full_loss(LossCheckSetup& setup, bool matched) {
    Rgvae& model = setup.model;
    std::vector<Tensor> point;
    for (const auto& name : setup.names) point.push_back(model.params().at(name));

    // Freeze the correspondence at the base point so the finite differences
    // see the same piecewise branch everywhere.
    PermutationBatch frozen;
    if (matched) {
        LatentCode latent = model.encode(setup.batch, false);
        DecodedLogits logits = model.decode(latent.z, false);
        PredGraphs pred = activate_prediction(logits);
        frozen = discretize(maxpool_similarity(affinity_batch(setup.batch, pred),
                                               model.config().match_iterations));
    }

    auto f = [&](const std::vector<Tensor>& p) {
        for (size_t i = 0; i < setup.names.size(); ++i)
            model.params().at(setup.names[i]) = p[i];
        LatentCode latent = model.encode(setup.batch, false);
        DecodedLogits logits = model.decode(latent.z, false);
        LossBreakdown lb =
            matched ? loss_matched(setup.batch, logits, latent, 2.0, 0.1,
                                   model.config().match_iterations, &frozen)
                    : loss_standard(setup.batch, logits, latent, 2.0, 0.1);
        return lb.total;
    };
    return check_gradients(f, point);
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed) {
    Rng rng(seed);
    std::vector<GradCheckResult> results;
    auto push = [&](const std::string& name, double err) {
        results.push_back({name, err});
    };
    const int points = 10;

    push("matmul", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(matmul(p[0], p[1])); },
                 {rand_t(r, {3, 4}), rand_t(r, {4, 2})});
         }));
    push("matmul_batched_shared", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(matmul(p[0], p[1])); },
                 {rand_t(r, {2, 3, 4}), rand_t(r, {4, 2})});
         }));
    push("matmul_batched", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(matmul(p[0], p[1])); },
                 {rand_t(r, {2, 3, 4}), rand_t(r, {2, 4, 2})});
         }));
    push("add", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {3, 4});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) { return sum(mul(add(p[0], p[1]), w)); },
                 {rand_t(r, {3, 4}), rand_t(r, {3, 4})});
         }));
    push("add_bias_broadcast", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {3, 4});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) { return sum(mul(add(p[0], p[1]), w)); },
                 {rand_t(r, {3, 4}), rand_t(r, {4})});
         }));
    push("mul", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(mul(p[0], p[1])); },
                 {rand_t(r, {2, 5}), rand_t(r, {2, 5})});
         }));
    push("scale_add_scalar", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) {
                     return sum(add_scalar(scale(p[0], -1.7), 0.3));
                 },
                 {rand_t(r, {6})});
         }));
    push("relu", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {4, 3});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) { return sum(mul(relu(p[0]), w)); },
                 {rand_away_from_zero(r, {4, 3})});
         }));
    push("sigmoid", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {5});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) { return sum(mul(sigmoid(p[0]), w)); },
                 {rand_t(r, {5}, -3.0, 3.0)});
         }));
    push("softmax", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {3, 4});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) {
                     return sum(mul(softmax_lastdim(p[0]), w));
                 },
                 {rand_t(r, {3, 4}, -2.0, 2.0)});
         }));
    push("log", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(log(p[0])); },
                 {rand_t(r, {7}, 0.5, 2.0)});
         }));
    push("exp", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(exp(p[0])); },
                 {rand_t(r, {7}, -1.5, 1.5)});
         }));
    push("abs", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {6});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) { return sum(mul(abs(p[0]), w)); },
                 {rand_away_from_zero(r, {6})});
         }));
    push("clamp", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {6});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) {
                     return sum(mul(clamp(p[0], -0.9, 0.9), w));
                 },
                 {rand_t(r, {6}, -0.7, 0.7)});
         }));
    push("sum", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(p[0]); },
                 {rand_t(r, {3, 3})});
         }));
    push("mean", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return mean(mul(p[0], p[0])); },
                 {rand_t(r, {3, 3})});
         }));
    push("sum_lastdim", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {4});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) {
                     return sum(mul(sum_lastdim(p[0]), w));
                 },
                 {rand_t(r, {4, 5})});
         }));
    push("reshape_flatten", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {12});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) {
                     return sum(mul(flatten(reshape(p[0], {2, 6})), w));
                 },
                 {rand_t(r, {3, 4})});
         }));
    push("concat", max_over_points(rng, points, [](Rng& r) {
             Tensor w0 = rand_t(r, {5, 3});
             Tensor w1 = rand_t(r, {2, 7});
             return check_gradients(
                 [w0, w1](const std::vector<Tensor>& p) {
                     Tensor rows_cat = mul(concat({p[0], p[1]}, 0), w0);
                     Tensor cols_cat = mul(concat({p[2], p[3]}, 1), w1);
                     return add(sum(rows_cat), sum(cols_cat));
                 },
                 {rand_t(r, {2, 3}), rand_t(r, {3, 3}), rand_t(r, {2, 3}),
                  rand_t(r, {2, 4})});
         }));
    push("slice_lastdim", max_over_points(rng, points, [](Rng& r) {
             Tensor w = rand_t(r, {3, 2});
             return check_gradients(
                 [w](const std::vector<Tensor>& p) {
                     return sum(mul(slice_lastdim(p[0], 1, 3), w));
                 },
                 {rand_t(r, {3, 5})});
         }));
    push("dropout", max_over_points(rng, points, [](Rng& r) {
             uint64_t mask_seed = r.next_u64();
             Tensor w = rand_t(r, {4, 4});
             return check_gradients(
                 [w, mask_seed](const std::vector<Tensor>& p) {
                     Rng mask_rng(mask_seed);  // same mask on every call
                     return sum(mul(dropout(p[0], 0.4, true, mask_rng), w));
                 },
                 {rand_t(r, {4, 4})});
         }));
    push("gather", max_over_points(rng, points, [](Rng& r) {
             std::vector<size_t> idx = {0, 3, 3, 5, 1};
             Tensor w = rand_t(r, {5});
             return check_gradients(
                 [w, idx](const std::vector<Tensor>& p) {
                     return sum(mul(gather(p[0], idx, {5}), w));
                 },
                 {rand_t(r, {6})});
         }));
    push("segment_sum", max_over_points(rng, points, [](Rng& r) {
             std::vector<size_t> seg = {0, 0, 1, 2, 2, 2};
             Tensor w = rand_t(r, {3});
             return check_gradients(
                 [w, seg](const std::vector<Tensor>& p) {
                     return sum(mul(segment_sum(p[0], seg, 3), w));
                 },
                 {rand_t(r, {6})});
         }));
    push("sigmoid_matmul_chain", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) {
                     return mean(sigmoid(matmul(sigmoid(matmul(p[0], p[1])), p[2])));
                 },
                 {rand_t(r, {2, 3}), rand_t(r, {3, 4}), rand_t(r, {4, 2})});
         }));
    push("sum_of_squares", max_over_points(rng, points, [](Rng& r) {
             return check_gradients(
                 [](const std::vector<Tensor>& p) { return sum(mul(p[0], p[0])); },
                 {rand_t(r, {8})});
         }));
    push("constant_fn", check_gradients(
                            [](const std::vector<Tensor>&) { return Tensor::scalar(3.5); },
                            {rand_t(rng, {4})}));

    {
        auto setup = make_tiny_model(EncoderKind::mlp, rng, 101);
        push("loss_standard_mlp", check_full_loss(setup, false));
    }
    {
        auto setup = make_tiny_model(EncoderKind::mlp, rng, 102);
        push("loss_matched_mlp", check_full_loss(setup, true));
    }
    {
        auto setup = make_tiny_model(EncoderKind::gcn, rng, 103);
        push("loss_standard_gcn", check_full_loss(setup, false));
    }
    {
        auto setup = make_tiny_model(EncoderKind::gcn, rng, 104);
        push("loss_matched_gcn", check_full_loss(setup, true));
    }
    return results;
}

}  // namespace rgvae
