#include "rgvae/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rgvae/checkpoint.hpp"

namespace rgvae {

RelationFilter RelationFilter::build(const TripleStore& store, const std::string& key,
                                     TypeMatchMode mode) {
    RelationFilter f;
    f.key = key;
    f.mode = mode;
    f.pass.resize(store.num_relations(), 0);
    for (size_t r = 0; r < store.num_relations(); ++r) {
        const std::string& name = store.relations()[r];
        bool hit = mode == TypeMatchMode::substring
                       ? name.find(key) != std::string::npos
                       : TypeCatalog::base_type(name) == key;
        f.pass[r] = hit ? 1 : 0;
    }
    return f;
}

size_t RelationFilter::pass_count() const {
    size_t c = 0;
    for (char v : pass) c += v;
    return c;
}

bool entity_matches_type(const TypeCatalog& catalog, int32_t entity,
                         const std::string& key, TypeMatchMode mode) {
    return mode == TypeMatchMode::substring ? catalog.has_type_substring(entity, key)
                                            : catalog.has_base_type(entity, key);
}

double type_fraction(const TypeCatalog& catalog, const std::string& key,
                     TypeMatchMode mode) {
    if (catalog.num_entities() == 0) return 0.0;
    size_t c = 0;
    for (size_t e = 0; e < catalog.num_entities(); ++e)
        if (entity_matches_type(catalog, static_cast<int32_t>(e), key, mode)) ++c;
    return static_cast<double>(c) / static_cast<double>(catalog.num_entities());
}

GenerationRun generate_triples(Rgvae& model, size_t count_target, double sigma,
                               const RelationFilter& filter, Rng& rng,
                               size_t max_attempt_factor) {
    if (sigma <= 0.0) throw contract_error("sigma must be positive");
    const RgvaeConfig& cfg = model.config();
    GenerationRun run;
    size_t cap = max_attempt_factor * count_target;
    const size_t chunk = 256;

    autograd::NoGradGuard ng;
    while (run.kept < count_target && run.z_draws < cap) {
        size_t m = std::min(chunk, cap - run.z_draws);
        std::vector<double> z(m * cfg.d_z);
        for (double& v : z) v = sigma * rng.normal();
        run.z_draws += m;
        DecodedLogits logits = model.decode(Tensor::from({m, cfg.d_z}, std::move(z)), false);
        std::vector<SparseGraph> graphs = sample_discrete(logits, rng);
        std::vector<Triple> triples = graphs_to_triples(graphs);
        for (const Triple& t : triples) {
            run.raw.push_back(t);
            if (filter.passes(t.r)) ++run.kept;
        }
    }
    run.capped = run.kept < count_target;
    return run;
}

GenerationReport validate_generated(const std::vector<Triple>& raw,
                                    const TypeCatalog& catalog, const TripleStore& store,
                                    const std::string& key_type, TypeMatchMode mode) {
    RelationFilter filter = RelationFilter::build(store, key_type, mode);
    GenerationReport rep;
    rep.total = raw.size();
    for (const Triple& t : raw) {
        if (!filter.passes(t.r)) continue;
        ++rep.kept;
        if (!entity_matches_type(catalog, t.s, key_type, mode)) continue;
        ++rep.valid;
        if (!store.contains(t)) ++rep.novel;
    }
    rep.baseline = type_fraction(catalog, key_type, mode);
    return rep;
}

namespace {

std::vector<double> mean_latent(Rgvae& model, const Triple& t) {
    autograd::NoGradGuard ng;
    auto graphs = triples_to_graphs({t}, model.config().n, model.config().d_e,
                                    model.config().d_r);
    LatentCode code = model.encode(graphs, false);
    return code.mean.data();
}

std::vector<std::vector<Triple>> decode_rows(Rgvae& model, std::vector<double> zdata,
                                             size_t rows) {
    autograd::NoGradGuard ng;
    DecodedLogits logits =
        model.decode(Tensor::from({rows, model.config().d_z}, std::move(zdata)), false);
    std::vector<SparseGraph> graphs = argmax_discrete(logits);
    std::vector<std::vector<Triple>> out;
    out.reserve(rows);
    for (const SparseGraph& g : graphs) out.push_back(graphs_to_triples({g}));
    return out;
}

}  // namespace

std::vector<std::vector<Triple>> interpolate_between(Rgvae& model, const Triple& a,
                                                     const Triple& b, size_t steps) {
    if (steps < 2) throw contract_error("interpolation needs at least 2 steps");
    std::vector<double> za = mean_latent(model, a);
    std::vector<double> zb = mean_latent(model, b);
    size_t d_z = model.config().d_z;
    std::vector<double> z(steps * d_z);
    for (size_t j = 0; j < steps; ++j) {
        double t = static_cast<double>(j) / static_cast<double>(steps - 1);
        for (size_t i = 0; i < d_z; ++i)
            z[j * d_z + i] = za[i] + t * (zb[i] - za[i]);
    }
    return decode_rows(model, std::move(z), steps);
}

std::vector<double> ci_grid(size_t steps) {
    if (steps < 2) throw contract_error("interpolation needs at least 2 steps");
    double s = (1.96 * 2.0) / static_cast<double>(steps - 1);
    std::vector<double> out(steps);
    for (size_t j = 0; j < steps; ++j) out[j] = -1.96 + static_cast<double>(j) * s;
    return out;
}

std::vector<std::vector<std::vector<Triple>>> interpolate_dims(Rgvae& model,
                                                               const Triple& anchor,
                                                               size_t steps) {
    std::vector<double> grid = ci_grid(steps);
    std::vector<double> za = mean_latent(model, anchor);
    size_t d_z = model.config().d_z;

    std::vector<std::vector<std::vector<Triple>>> out(d_z);
    for (size_t dim = 0; dim < d_z; ++dim) {
        std::vector<double> z(steps * d_z);
        for (size_t j = 0; j < steps; ++j) {
            for (size_t i = 0; i < d_z; ++i) z[j * d_z + i] = za[i];
            z[j * d_z + dim] = grid[j];
        }
        out[dim] = decode_rows(model, std::move(z), steps);
    }
    return out;
}

void export_param_histograms(const std::string& checkpoint_path,
                             const std::string& out_tsv_path) {
    auto records = load_checkpoint(checkpoint_path);
    std::ofstream os(out_tsv_path);
    if (!os) throw data_error("cannot write " + out_tsv_path);
    char buf[40];
    for (const auto& [name, t] : records) {
        if (name == "config") continue;
        const char* kind = name.find("bias") != std::string::npos ? "bias" : "weight";
        os << name << "\t" << kind;
        for (double v : t.data()) {
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            os << "\t" << buf;
        }
        os << "\n";
    }
    if (!os) throw data_error("failed writing " + out_tsv_path);
}

}  // namespace rgvae
